//! Immutable expression trees over `n` field variables.
//!
//! Nodes are shared behind [`Arc`], so cloning an [`Expr`] is cheap and
//! sub-trees can be reused freely by the operator builders. Variables are
//! stored 0-based and printed 1-based as `u1..un`.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

/// Named transcendental constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NamedConst {
    Pi,
    E,
}

impl NamedConst {
    pub fn value(self) -> f64 {
        match self {
            NamedConst::Pi => std::f64::consts::PI,
            NamedConst::E => std::f64::consts::E,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NamedConst::Pi => "pi",
            NamedConst::E => "e",
        }
    }
}

/// Unary elementary functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Const(Rational64),
    Named(NamedConst),
    /// 0-based variable index.
    Var(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    /// Power with a constant rational exponent.
    Pow(Expr, Rational64),
    Neg(Expr),
    Func(Func, Expr),
}

/// An immutable, structurally comparable expression.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(value: Rational64) -> Self {
        Expr::from_node(Node::Const(value))
    }

    pub fn int(value: i64) -> Self {
        Expr::constant(Rational64::from_integer(value))
    }

    pub fn rational(numer: i64, denom: i64) -> Self {
        Expr::constant(Rational64::new(numer, denom))
    }

    pub fn zero() -> Self {
        Expr::int(0)
    }

    pub fn one() -> Self {
        Expr::int(1)
    }

    pub fn named(c: NamedConst) -> Self {
        Expr::from_node(Node::Named(c))
    }

    /// Variable with 0-based index.
    pub fn var(index: usize) -> Self {
        Expr::from_node(Node::Var(index))
    }

    /// Exact rational approximation of a double; `None` for non-finite
    /// values or magnitudes that do not fit an `i64` ratio.
    pub fn from_f64(value: f64) -> Option<Self> {
        if !value.is_finite() {
            return None;
        }
        if value == value.trunc() && value.abs() < 9.0e15 {
            return Some(Expr::int(value as i64));
        }
        Rational64::approximate_float(value).map(Expr::constant)
    }

    pub fn as_const(&self) -> Option<Rational64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    // Raw constructors: keep the tree exactly as written.

    pub fn raw_add(a: Expr, b: Expr) -> Self {
        Expr::from_node(Node::Add(a, b))
    }

    pub fn raw_sub(a: Expr, b: Expr) -> Self {
        Expr::from_node(Node::Sub(a, b))
    }

    pub fn raw_mul(a: Expr, b: Expr) -> Self {
        Expr::from_node(Node::Mul(a, b))
    }

    pub fn raw_div(a: Expr, b: Expr) -> Self {
        Expr::from_node(Node::Div(a, b))
    }

    pub fn raw_neg(a: Expr) -> Self {
        Expr::from_node(Node::Neg(a))
    }

    pub fn raw_pow(base: Expr, exponent: Rational64) -> Self {
        Expr::from_node(Node::Pow(base, exponent))
    }

    pub fn apply(func: Func, arg: Expr) -> Self {
        Expr::from_node(Node::Func(func, arg))
    }

    // Folding constructors: fold rational constants and drop additive
    // zeros and multiplicative ones; zero products and quotients collapse to
    // zero. No other rewriting happens.

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Self {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if let Some(s) = x.checked_add(&y) {
                return Expr::constant(s);
            }
        }
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        Expr::raw_add(a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Self {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if let Some(s) = x.checked_sub(&y) {
                return Expr::constant(s);
            }
        }
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return Expr::neg(b);
        }
        Expr::raw_sub(a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Self {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if let Some(p) = x.checked_mul(&y) {
                return Expr::constant(p);
            }
        }
        if a.is_zero() || b.is_zero() {
            return Expr::zero();
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        Expr::raw_mul(a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Expr, b: Expr) -> Self {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if !y.is_zero() {
                if let Some(q) = x.checked_div(&y) {
                    return Expr::constant(q);
                }
            }
        }
        if b.is_one() {
            return a;
        }
        if a.is_zero() && !b.is_zero() {
            return Expr::zero();
        }
        Expr::raw_div(a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Self {
        match a.node() {
            Node::Const(c) => Expr::constant(-*c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::raw_neg(a),
        }
    }

    pub fn pow(base: Expr, exponent: Rational64) -> Self {
        if exponent.is_zero() {
            return Expr::one();
        }
        if exponent.is_one() {
            return base;
        }
        if let (Some(c), true) = (base.as_const(), exponent.is_integer()) {
            if let Some(e) = exponent.to_integer().to_i32() {
                if !(c.is_zero() && e < 0) {
                    if let Some(v) = checked_rational_pow(c, e) {
                        return Expr::constant(v);
                    }
                }
            }
        }
        Expr::raw_pow(base, exponent)
    }

    pub fn powi(&self, exponent: i64) -> Self {
        Expr::pow(self.clone(), Rational64::from_integer(exponent))
    }

    pub fn exp(&self) -> Self {
        Expr::apply(Func::Exp, self.clone())
    }

    pub fn ln(&self) -> Self {
        Expr::apply(Func::Ln, self.clone())
    }

    pub fn sin(&self) -> Self {
        Expr::apply(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Self {
        Expr::apply(Func::Cos, self.clone())
    }

    pub fn sqrt(&self) -> Self {
        Expr::apply(Func::Sqrt, self.clone())
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.variables().into_iter().next_back()
    }

    /// Set of 0-based variable indices occurring in the tree.
    pub fn variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| {
            if let Node::Var(i) = node {
                out.insert(*i);
            }
        });
        out
    }

    /// True if the expression mentions only variables in `allowed`.
    pub fn depends_only_on(&self, allowed: &[usize]) -> bool {
        self.variables().iter().all(|v| allowed.contains(v))
    }

    /// Variables that occur under `ln`/`sqrt`, as a divisor, or as the base
    /// of a non-integer or negative power. Sampling boxes keep these positive.
    pub fn guarded_variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| {
            let guarded = match node {
                Node::Div(_, d) => Some(d),
                Node::Func(Func::Ln | Func::Sqrt, arg) => Some(arg),
                Node::Pow(base, e) if !e.is_integer() || e.is_negative() => Some(base),
                _ => None,
            };
            if let Some(sub) = guarded {
                out.extend(sub.variables());
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Node)) {
        f(self.node());
        match self.node() {
            Node::Const(_) | Node::Named(_) | Node::Var(_) => {}
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Func(_, a) => a.visit(f),
        }
    }

    /// Symbolic partial derivative with respect to the 0-based variable `k`.
    pub fn derivative(&self, k: usize) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Named(_) => Expr::zero(),
            Node::Var(i) => {
                if *i == k {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => Expr::add(a.derivative(k), b.derivative(k)),
            Node::Sub(a, b) => Expr::sub(a.derivative(k), b.derivative(k)),
            Node::Mul(a, b) => Expr::add(
                Expr::mul(a.derivative(k), b.clone()),
                Expr::mul(a.clone(), b.derivative(k)),
            ),
            Node::Div(a, b) => {
                let da = a.derivative(k);
                let db = b.derivative(k);
                if db.is_zero() {
                    return Expr::div(da, b.clone());
                }
                Expr::div(
                    Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db)),
                    b.powi(2),
                )
            }
            Node::Pow(a, e) => {
                let da = a.derivative(k);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = Expr::mul(
                    Expr::constant(*e),
                    Expr::pow(a.clone(), *e - Rational64::one()),
                );
                Expr::mul(outer, da)
            }
            Node::Neg(a) => Expr::neg(a.derivative(k)),
            Node::Func(f, a) => {
                let da = a.derivative(k);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Ln => return Expr::div(da, a.clone()),
                    Func::Sin => a.cos(),
                    Func::Cos => Expr::neg(a.sin()),
                    Func::Sqrt => {
                        return Expr::div(da, Expr::mul(Expr::int(2), self.clone()));
                    }
                };
                Expr::mul(outer, da)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self.node() {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Neg(..) => 3,
            Node::Pow(..) => 4,
            Node::Const(c) if c.is_negative() || !c.is_integer() => 0,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self.node() {
            Node::Const(c) => write_rational(f, *c),
            Node::Named(c) => write!(f, "{}", c.name()),
            Node::Var(i) => write!(f, "u{}", i + 1),
            Node::Add(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " + ")?;
                b.fmt_at(f, 2)
            }
            Node::Sub(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " - ")?;
                b.fmt_at(f, 2)
            }
            Node::Mul(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, "*")?;
                b.fmt_at(f, 3)
            }
            Node::Div(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, "/")?;
                b.fmt_at(f, 3)
            }
            Node::Neg(a) => {
                write!(f, "-")?;
                a.fmt_at(f, 4)
            }
            Node::Pow(a, e) => {
                a.fmt_at(f, 5)?;
                write!(f, "^")?;
                if e.is_integer() {
                    write!(f, "{}", e.numer())
                } else {
                    write!(f, "(")?;
                    write_rational(f, *e)?;
                    write!(f, ")")
                }
            }
            Node::Func(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, c: Rational64) -> fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

fn checked_rational_pow(base: Rational64, exponent: i32) -> Option<Rational64> {
    let (b, e) = if exponent < 0 {
        (base.recip(), exponent.unsigned_abs())
    } else {
        (base, exponent as u32)
    };
    let mut acc = Rational64::one();
    for _ in 0..e {
        acc = acc.checked_mul(&b)?;
    }
    Some(acc)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::int(v)
    }
}

impl From<Rational64> for Expr {
    fn from(v: Rational64) -> Self {
        Expr::constant(v)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $ctor:path) => {
        impl $trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self, rhs)
            }
        }
        impl $trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self, rhs.clone())
            }
        }
        impl $trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self.clone(), rhs)
            }
        }
        impl $trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self.clone(), rhs.clone())
            }
        }
        impl $trait<i64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                $ctor(self, Expr::int(rhs))
            }
        }
        impl $trait<i64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                $ctor(self.clone(), Expr::int(rhs))
            }
        }
        impl $trait<Expr> for i64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(Expr::int(self), rhs)
            }
        }
        impl $trait<&Expr> for i64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(Expr::int(self), rhs.clone())
            }
        }
    };
}

binop!(Add, add, Expr::add);
binop!(Sub, sub, Expr::sub);
binop!(Mul, mul, Expr::mul);
binop!(Div, div, Expr::div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}
