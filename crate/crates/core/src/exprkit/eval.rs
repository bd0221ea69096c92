use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use super::expr::{Expr, Func, Node};
use super::jet::{power_taylor, Jet, MAX_ORDER};
use super::sample::Point;

/// What went wrong while evaluating a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainViolation {
    LogOfNonPositive,
    DivisionByZero,
    ZeroToNegativePower,
    SqrtOfNegative,
    NegativeBaseFractionalPower,
    /// Value is fine but a derivative is singular (e.g. `sqrt` at 0).
    SingularDerivative,
    NonFinite,
}

impl fmt::Display for DomainViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DomainViolation::LogOfNonPositive => "logarithm of a non-positive value",
            DomainViolation::DivisionByZero => "division by zero",
            DomainViolation::ZeroToNegativePower => "zero raised to a negative power",
            DomainViolation::SqrtOfNegative => "square root of a negative value",
            DomainViolation::NegativeBaseFractionalPower => {
                "negative base raised to a fractional power"
            }
            DomainViolation::SingularDerivative => "singular derivative",
            DomainViolation::NonFinite => "non-finite value",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain violation ({kind}) in `{subtree}`")]
    Domain {
        kind: DomainViolation,
        subtree: String,
    },
    #[error("expression uses variable u{needed} but the point has dimension {got}")]
    DimensionMismatch { needed: usize, got: usize },
    #[error("jet order {0} is outside 1..={MAX_ORDER}")]
    InvalidOrder(usize),
}

fn domain(kind: DomainViolation, e: &Expr) -> EvalError {
    EvalError::Domain {
        kind,
        subtree: e.to_string(),
    }
}

fn check_dim(e: &Expr, dim: usize) -> Result<(), EvalError> {
    match e.max_var() {
        Some(v) if v >= dim => Err(EvalError::DimensionMismatch {
            needed: v + 1,
            got: dim,
        }),
        _ => Ok(()),
    }
}

/// Double-precision value of `e` at `p`.
pub fn eval_scalar(e: &Expr, p: &Point) -> Result<f64, EvalError> {
    e.eval(p.coords())
}

/// All partial derivatives of `e` at `p` up to total degree `order`.
pub fn eval_jet(e: &Expr, p: &Point, order: usize) -> Result<Jet, EvalError> {
    if order == 0 || order > MAX_ORDER {
        return Err(EvalError::InvalidOrder(order));
    }
    e.jet(p.coords(), order)
}

impl Expr {
    /// Scalar evaluation at raw coordinates.
    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        check_dim(self, x.len())?;
        scalar(self, x)
    }

    /// Jet evaluation at raw coordinates. Any order is accepted here; the
    /// public [`eval_jet`] caps it at [`MAX_ORDER`].
    pub fn jet(&self, x: &[f64], order: usize) -> Result<Jet, EvalError> {
        check_dim(self, x.len())?;
        let base: Arc<[f64]> = x.into();
        jet(self, &base, order)
    }
}

fn finite(v: f64, e: &Expr) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain(DomainViolation::NonFinite, e))
    }
}

fn scalar(e: &Expr, x: &[f64]) -> Result<f64, EvalError> {
    let v = match e.node() {
        Node::Const(c) => c.to_f64().unwrap_or(f64::NAN),
        Node::Named(c) => c.value(),
        Node::Var(i) => x[*i],
        Node::Add(a, b) => scalar(a, x)? + scalar(b, x)?,
        Node::Sub(a, b) => scalar(a, x)? - scalar(b, x)?,
        Node::Mul(a, b) => scalar(a, x)? * scalar(b, x)?,
        Node::Div(a, b) => {
            let num = scalar(a, x)?;
            let den = scalar(b, x)?;
            if den == 0.0 {
                return Err(domain(DomainViolation::DivisionByZero, e));
            }
            num / den
        }
        Node::Neg(a) => -scalar(a, x)?,
        Node::Pow(a, p) => {
            let base = scalar(a, x)?;
            if base == 0.0 && p.is_negative() {
                return Err(domain(DomainViolation::ZeroToNegativePower, e));
            }
            match p.is_integer().then(|| p.to_integer().to_i32()).flatten() {
                Some(k) => base.powi(k),
                None => {
                    if base < 0.0 {
                        return Err(domain(DomainViolation::NegativeBaseFractionalPower, e));
                    }
                    base.powf(p.to_f64().unwrap_or(f64::NAN))
                }
            }
        }
        Node::Func(f, a) => {
            let arg = scalar(a, x)?;
            match f {
                Func::Exp => arg.exp(),
                Func::Ln => {
                    if arg <= 0.0 {
                        return Err(domain(DomainViolation::LogOfNonPositive, e));
                    }
                    arg.ln()
                }
                Func::Sin => arg.sin(),
                Func::Cos => arg.cos(),
                Func::Sqrt => {
                    if arg < 0.0 {
                        return Err(domain(DomainViolation::SqrtOfNegative, e));
                    }
                    arg.sqrt()
                }
            }
        }
    };
    finite(v, e)
}

fn checked(j: Jet, e: &Expr) -> Result<Jet, EvalError> {
    if j.is_finite() {
        Ok(j)
    } else {
        Err(domain(DomainViolation::NonFinite, e))
    }
}

fn jet(e: &Expr, base: &Arc<[f64]>, order: usize) -> Result<Jet, EvalError> {
    let out = match e.node() {
        Node::Const(c) => Jet::constant_shared(base.clone(), order, c.to_f64().unwrap_or(f64::NAN)),
        Node::Named(c) => Jet::constant_shared(base.clone(), order, c.value()),
        Node::Var(i) => Jet::variable_shared(base.clone(), order, *i),
        Node::Add(a, b) => jet(a, base, order)?.add(&jet(b, base, order)?),
        Node::Sub(a, b) => jet(a, base, order)?.sub(&jet(b, base, order)?),
        Node::Mul(a, b) => jet(a, base, order)?.mul(&jet(b, base, order)?),
        Node::Div(a, b) => {
            let num = jet(a, base, order)?;
            let den = jet(b, base, order)?;
            if den.value() == 0.0 {
                return Err(domain(DomainViolation::DivisionByZero, e));
            }
            num.mul(&den.recip())
        }
        Node::Neg(a) => jet(a, base, order)?.neg(),
        Node::Pow(a, p) => {
            let inner = jet(a, base, order)?;
            let v = inner.value();
            let int_exp = p.is_integer().then(|| p.to_integer().to_i32()).flatten();
            match int_exp {
                Some(k) if k >= 0 => inner.powu(k as u32),
                Some(_) => {
                    if v == 0.0 {
                        return Err(domain(DomainViolation::ZeroToNegativePower, e));
                    }
                    inner.compose(&power_taylor(v, p.to_f64().unwrap_or(f64::NAN), order))
                }
                None => {
                    if v < 0.0 {
                        return Err(domain(DomainViolation::NegativeBaseFractionalPower, e));
                    }
                    if v == 0.0 {
                        if p.is_negative() {
                            return Err(domain(DomainViolation::ZeroToNegativePower, e));
                        }
                        // some derivative up to `order` has a negative power of zero
                        if p.to_f64().unwrap_or(0.0) < order as f64 {
                            return Err(domain(DomainViolation::SingularDerivative, e));
                        }
                    }
                    inner.compose(&power_taylor(v, p.to_f64().unwrap_or(f64::NAN), order))
                }
            }
        }
        Node::Func(f, a) => {
            let inner = jet(a, base, order)?;
            let v = inner.value();
            let taylor: Vec<f64> = match f {
                Func::Exp => {
                    let ev = v.exp();
                    let mut fact = 1.0;
                    (0..=order)
                        .map(|m| {
                            if m > 0 {
                                fact *= m as f64;
                            }
                            ev / fact
                        })
                        .collect()
                }
                Func::Ln => {
                    if v <= 0.0 {
                        return Err(domain(DomainViolation::LogOfNonPositive, e));
                    }
                    (0..=order)
                        .map(|m| {
                            if m == 0 {
                                v.ln()
                            } else {
                                let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                                sign / (m as f64 * v.powi(m as i32))
                            }
                        })
                        .collect()
                }
                Func::Sin | Func::Cos => {
                    let (s, c) = v.sin_cos();
                    // derivative cycle starting at sin: s, c, -s, -c
                    let cycle = [s, c, -s, -c];
                    let shift = if *f == Func::Sin { 0 } else { 1 };
                    let mut fact = 1.0;
                    (0..=order)
                        .map(|m| {
                            if m > 0 {
                                fact *= m as f64;
                            }
                            cycle[(m + shift) % 4] / fact
                        })
                        .collect()
                }
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(domain(DomainViolation::SqrtOfNegative, e));
                    }
                    if v == 0.0 {
                        return Err(domain(DomainViolation::SingularDerivative, e));
                    }
                    power_taylor(v, 0.5, order)
                }
            };
            inner.compose(&taylor)
        }
    };
    checked(out, e)
}
