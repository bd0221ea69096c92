use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::CheckError;
use crate::exprkit::{parse_expr, Expr};
use crate::geomtensor::{scaled_det, AffinorField, MetricField, Sign, DEGENERACY_FLOOR};
use crate::hamcheck::{LocalOperator, NonlocalOperator};

use super::printed::{connection_from_printed, e12, e21, matrix, pe, OFFSET};
use super::{require_fiber, DriftError};

/// `r^k_x` for `k` in 0..3.
fn rx(k: usize) -> Expr {
    Expr::var(OFFSET + k)
}

fn r(k: usize) -> Expr {
    Expr::var(k)
}

fn half() -> Expr {
    Expr::rational(1, 2)
}

/// Nutku operators on the first two invariants, with the standard `1/2`
/// replaced by `half` (used by mutations).
pub(crate) fn nutku_with(k: u8, half: Rational64) -> Result<LocalOperator, DriftError> {
    let e = e21();
    let h = Expr::constant(half);
    let (diag, pre, m) = match k {
        1 => (
            vec![-&e, e.clone()],
            -(&e * &h),
            matrix(&[&["r2x - r1x", "r1x - r2x"], &["r2x - r1x", "r1x - r2x"]]),
        ),
        2 => (
            vec![e.clone(), e.clone()],
            &e * &h,
            matrix(&[&["r2x - r1x", "-r1x - r2x"], &["r1x + r2x", "r2x - r1x"]]),
        ),
        3 => (
            vec![&e * r(0), &e * r(1)],
            &e * &h,
            matrix(&[
                &["(1 - r1)*r1x + r1*r2x", "-r2*r1x - r1*r2x"],
                &["r2*r1x + r1*r2x", "-r2*r1x + (1 + r2)*r2x"],
            ]),
        ),
        other => return Err(DriftError::UnknownNutku(other)),
    };
    let b = connection_from_printed(2, &pre, &m)?;
    Ok(LocalOperator::new(MetricField::diagonal(diag), b)?)
}

/// The three compatible local operators of the two-component subsystem.
pub fn build_nutku(k: u8) -> Result<LocalOperator, DriftError> {
    nutku_with(k, Rational64::new(1, 2))
}

pub(crate) fn h1_theta_with(theta: &Expr, f33_sign: i64) -> Result<LocalOperator, DriftError> {
    require_fiber("Θ", theta)?;
    let e = e21();
    let d = rx(1) - rx(0);
    let f33 = -(&e * (Expr::int(2) * &d * theta + rx(2) * theta.derivative(2))) * f33_sign;
    let m = vec![
        vec![rx(1) - rx(0), rx(0) - rx(1), Expr::int(-2) * rx(2)],
        vec![rx(1) - rx(0), rx(0) - rx(1), Expr::int(-2) * rx(2)],
        vec![Expr::int(2) * rx(2), Expr::int(2) * rx(2), f33],
    ];
    let b = connection_from_printed(3, &-(&e * half()), &m)?;
    let g = MetricField::diagonal(vec![-&e, e.clone(), &e * &e * theta]);
    Ok(LocalOperator::new(g, b)?)
}

/// Local three-component prolongation of the first Nutku operator.
pub fn build_h1_theta(theta: &Expr) -> Result<LocalOperator, DriftError> {
    h1_theta_with(theta, 1)
}

/// The `(3,3)` entry shared by both nonlocal operators, `f33_sign` times the
/// reference one.
fn hat_f33(theta_hat: &Expr, f33_sign: i64) -> Expr {
    (Expr::int(2) * (rx(1) - rx(0)) * theta_hat + theta_hat.derivative(2) * rx(2)) * f33_sign
}

pub(crate) fn h2_hat_local(theta: &Expr, f33_sign: i64) -> Result<LocalOperator, DriftError> {
    require_fiber("Θ", theta)?;
    let e = e21();
    let th = &e * theta;
    let two = || Expr::int(2);
    let m = vec![
        vec![rx(1) - rx(0), -rx(0) - rx(1), -(two() * rx(2))],
        vec![rx(0) + rx(1), rx(1) - rx(0), two() * rx(2)],
        vec![two() * rx(2), -(two() * rx(2)), hat_f33(&th, f33_sign)],
    ];
    let b = connection_from_printed(3, &(&e * half()), &m)?;
    let g = MetricField::diagonal(vec![e.clone(), e.clone(), &e * &th]);
    Ok(LocalOperator::new(g, b)?)
}

pub(crate) fn h3_hat_local(theta: &Expr) -> Result<LocalOperator, DriftError> {
    require_fiber("Θ", theta)?;
    let e = e21();
    let th = &e * theta;
    let two = || Expr::int(2);
    let d = rx(1) - rx(0);
    let m = vec![
        vec![
            rx(0) + r(0) * &d,
            -(r(1) * rx(0)) - r(0) * rx(1),
            -(two() * r(0) * rx(2)),
        ],
        vec![
            r(1) * rx(0) + r(0) * rx(1),
            rx(1) + r(1) * &d,
            two() * r(1) * rx(2),
        ],
        vec![
            two() * r(0) * rx(2),
            -(two() * r(1) * rx(2)),
            hat_f33(&th, 1),
        ],
    ];
    let b = connection_from_printed(3, &(&e * half()), &m)?;
    let g = MetricField::diagonal(vec![&e * r(0), &e * r(1), &e * &th]);
    Ok(LocalOperator::new(g, b)?)
}

/// Tail constants `c_α, b_{iα}` and signs `ε_α` of the nonlocal operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantBlock {
    pub c: [Rational64; 3],
    pub b1: [Rational64; 3],
    pub b2: [Rational64; 3],
    pub b3: [Rational64; 3],
    pub eps: [Sign; 3],
}

/// Tolerance of [`ConstantBlock::validate`].
pub const CONSTRAINT_TOL: f64 = 1e-12;

const DEFAULT_SIGNS: [Sign; 3] = [Sign::Plus, Sign::Plus, Sign::Minus];

impl ConstantBlock {
    /// A block with the signs `(+1, +1, -1)`.
    pub fn new(
        c: [Rational64; 3],
        b1: [Rational64; 3],
        b2: [Rational64; 3],
        b3: [Rational64; 3],
    ) -> Self {
        ConstantBlock {
            c,
            b1,
            b2,
            b3,
            eps: DEFAULT_SIGNS,
        }
    }

    fn f(x: Rational64) -> f64 {
        x.to_f64().unwrap_or(f64::NAN)
    }

    /// `(equation, residual)` for each of the four algebraic constraints.
    pub fn constraint_residuals(&self) -> Vec<(&'static str, f64)> {
        let eps: Vec<f64> = self.eps.iter().map(|s| s.value()).collect();
        let sum = |other: &[Rational64; 3], rhs: f64| {
            let terms: Vec<f64> = (0..3)
                .map(|a| eps[a] * Self::f(self.c[a]) * Self::f(other[a]))
                .collect();
            let scale = terms.iter().fold(rhs.abs().max(1.0), |m, t| m.max(t.abs()));
            (terms.iter().sum::<f64>() - rhs).abs() / scale
        };
        vec![
            ("sum_a e_a c_a^2 = 0", sum(&self.c, 0.0)),
            ("sum_a e_a c_a b_1a = 0", sum(&self.b1, 0.0)),
            ("sum_a e_a c_a b_2a = 0", sum(&self.b2, 0.0)),
            ("sum_a e_a c_a b_3a = -1", sum(&self.b3, -1.0)),
        ]
    }

    /// First violated constraint, if any.
    pub fn validate(&self) -> Result<(), DriftError> {
        if self.eps != DEFAULT_SIGNS {
            return Err(DriftError::ConstraintViolation {
                equation: "e = (+1, +1, -1)".into(),
                residual: 1.0,
            });
        }
        for (equation, residual) in self.constraint_residuals() {
            if !(residual <= CONSTRAINT_TOL) {
                return Err(DriftError::ConstraintViolation {
                    equation: equation.into(),
                    residual,
                });
            }
        }
        Ok(())
    }

    /// `Φ^α = b_{1α} Λ1 + b_{2α} Λ2 + b_{3α}`.
    pub fn phi(&self, alpha: usize, l1: &Expr, l2: &Expr) -> Expr {
        Expr::constant(self.b1[alpha]) * l1
            + Expr::constant(self.b2[alpha]) * l2
            + Expr::constant(self.b3[alpha])
    }
}

/// `c = (3, 4, 5)`, `b1 = (4, -3, 0)`, `b2 = (0, 5, 4)`, `b3 = (0, 0, 1/5)`.
pub fn default_constant_block() -> ConstantBlock {
    let i = |v: i64| Rational64::from_integer(v);
    ConstantBlock::new(
        [i(3), i(4), i(5)],
        [i(4), i(-3), i(0)],
        [i(0), i(5), i(4)],
        [
            Rational64::zero(),
            Rational64::zero(),
            Rational64::new(1, 5),
        ],
    )
}

/// `Θ = 1 + r3²`.
pub fn default_theta() -> Expr {
    parse_expr("1 + r3^2", 3).expect("literal")
}

/// `Λ1 = r3`, `Λ2 = r3²`.
pub fn default_lambdas() -> (Expr, Expr) {
    (
        parse_expr("r3", 3).expect("literal"),
        parse_expr("r3^2", 3).expect("literal"),
    )
}

/// Checks that `Λ1, Λ2, 1` are linearly independent functions of `r3` by
/// looking for a sample triple with a nonsingular evaluation matrix.
pub fn check_lambda_independence(l1: &Expr, l2: &Expr) -> Result<(), DriftError> {
    require_fiber("Λ1", l1)?;
    require_fiber("Λ2", l2)?;
    const TRIPLES: [[f64; 3]; 4] = [
        [0.2, 0.55, 0.9],
        [0.15, 0.4, 0.7],
        [0.3, 0.6, 0.95],
        [0.12, 0.5, 0.83],
    ];
    for t in TRIPLES {
        let rows: Option<Vec<f64>> = t
            .iter()
            .map(|&s| {
                let x = [0.0, 0.0, s];
                Some([l1.eval(&x).ok()?, l2.eval(&x).ok()?, 1.0])
            })
            .collect::<Option<Vec<_>>>()
            .map(|v| v.concat());
        if let Some(data) = rows {
            let m = nalgebra::DMatrix::from_row_slice(3, 3, &data);
            if scaled_det(&m).abs() >= DEGENERACY_FLOOR {
                return Ok(());
            }
        }
    }
    Err(DriftError::DependentLambdas)
}

fn h2_tails(l1: &Expr, l2: &Expr, cb: &ConstantBlock) -> Vec<AffinorField> {
    let e = e21();
    (0..3)
        .map(|a| {
            let c = Expr::constant(cb.c[a]);
            AffinorField::diagonal(
                cb.eps[a],
                vec![c.clone(), c.clone(), c + cb.phi(a, l1, l2) * &e],
            )
        })
        .collect()
}

pub(crate) fn h3_tails(
    l1: &Expr,
    l2: &Expr,
    cb: &ConstantBlock,
    phi_factor: Rational64,
) -> Vec<AffinorField> {
    let e = e21();
    let s = r(0) + r(1);
    (0..3)
        .map(|a| {
            let c = Expr::constant(cb.c[a]);
            AffinorField::diagonal(
                cb.eps[a],
                vec![
                    &c * (&s + 1),
                    &c * (&s - 1),
                    &c * &s + Expr::constant(phi_factor) * cb.phi(a, l1, l2) * &e,
                ],
            )
        })
        .collect()
}

fn check_params(l1: &Expr, l2: &Expr, cb: &ConstantBlock) -> Result<(), DriftError> {
    cb.validate()?;
    check_lambda_independence(l1, l2)
}

/// The second nonlocal operator without validating `cb` or the `Λ`s.
pub fn assemble_h2_hat(
    theta: &Expr,
    l1: &Expr,
    l2: &Expr,
    cb: &ConstantBlock,
) -> Result<NonlocalOperator, DriftError> {
    require_fiber("Λ1", l1)?;
    require_fiber("Λ2", l2)?;
    Ok(NonlocalOperator::new(
        h2_hat_local(theta, 1)?,
        h2_tails(l1, l2, cb),
    )?)
}

/// The third nonlocal operator without validating `cb` or the `Λ`s.
pub fn assemble_h3_hat(
    theta: &Expr,
    l1: &Expr,
    l2: &Expr,
    cb: &ConstantBlock,
) -> Result<NonlocalOperator, DriftError> {
    require_fiber("Λ1", l1)?;
    require_fiber("Λ2", l2)?;
    Ok(NonlocalOperator::new(
        h3_hat_local(theta)?,
        h3_tails(l1, l2, cb, Rational64::new(1, 2)),
    )?)
}

/// Nonlocal prolongation of the second Nutku operator.
pub fn build_h2_hat(
    theta: &Expr,
    l1: &Expr,
    l2: &Expr,
    cb: &ConstantBlock,
) -> Result<NonlocalOperator, DriftError> {
    check_params(l1, l2, cb)?;
    assemble_h2_hat(theta, l1, l2, cb)
}

/// Nonlocal prolongation of the third Nutku operator.
pub fn build_h3_hat(
    theta: &Expr,
    l1: &Expr,
    l2: &Expr,
    cb: &ConstantBlock,
) -> Result<NonlocalOperator, DriftError> {
    check_params(l1, l2, cb)?;
    assemble_h3_hat(theta, l1, l2, cb)
}

/// Which reading of the first operator after the reciprocal transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemarkVariant {
    /// `(1,2)` block with the sign that makes the operator skew-adjoint.
    Corrected,
    /// `(1,2)` block exactly as displayed; fails skew-adjointness.
    AsPrinted,
}

/// Local operators of the reciprocally transformed system.
pub fn build_remark_operators(
    theta: &Expr,
    variant: RemarkVariant,
) -> Result<[LocalOperator; 3], DriftError> {
    require_fiber("Θ̃", theta)?;
    let f = e12();
    let e = e21();
    let t33 = &e * rx(2) * theta.derivative(2);
    let g33 = &e * theta;
    let z = Expr::zero;
    let row = |a: &str, b: &str| vec![pe(a), pe(b), z()];

    let block1 = match variant {
        RemarkVariant::Corrected => [row("r1x - r2x", "r2x - r1x"), row("r1x - r2x", "r2x - r1x")],
        RemarkVariant::AsPrinted => [row("r2x - r1x", "r1x - r2x"), row("r2x - r1x", "r1x - r2x")],
    };
    let m1 = vec![block1[0].clone(), block1[1].clone(), vec![z(), z(), -&t33]];
    let m2 = vec![
        row("r1x - r2x", "r1x + r2x"),
        row("-r1x - r2x", "r1x - r2x"),
        vec![z(), z(), t33.clone()],
    ];
    let m3 = vec![
        row("r1x + r1*r1x - r1*r2x", "r2*r1x + r1*r2x"),
        row("-r2*r1x - r1*r2x", "r2*r1x + r2x - r2*r2x"),
        vec![z(), z(), t33.clone()],
    ];
    let pre_neg = -(&f * half());
    let pre_pos = &f * half();
    let h1 = LocalOperator::new(
        MetricField::diagonal(vec![-&f, f.clone(), &f * &g33]),
        connection_from_printed(3, &pre_neg, &m1)?,
    )?;
    let h2 = LocalOperator::new(
        MetricField::diagonal(vec![f.clone(), f.clone(), &f * &g33]),
        connection_from_printed(3, &pre_pos, &m2)?,
    )?;
    let h3 = LocalOperator::new(
        MetricField::diagonal(vec![&f * r(0), &f * r(1), &f * &g33]),
        connection_from_printed(3, &pre_pos, &m3)?,
    )?;
    Ok([h1, h2, h3])
}

impl From<DriftError> for CheckError {
    fn from(e: DriftError) -> Self {
        match e {
            DriftError::Check(c) => c,
            other => CheckError::Invalid(other.to_string()),
        }
    }
}
