//! Oracles and generators shared by the integration tests and the
//! acceptance harness. Nothing here calls the library's derivative code.

#![allow(dead_code)]

use hydroham::exprkit::{parse_expr, Expr, Point};
use proptest::prelude::*;

/// Smooth expressions in three variables, finite on `[-1, 1]^3`.
pub const CORPUS: &[&str] = &[
    "u1*u2 + u3^3",
    "sin(u1)*cos(u2) - u3",
    "exp(u1 - u2)*(u3 + 2)",
    "ln(2 + u1^2 + u2)",
    "sqrt(3 + u1*u2*u3)",
    "(u1 + u2)/(2 + cos(u3))",
    "exp(sin(u1*u2))*u3^2",
    "(exp(u1 + u2*u3) - 1)/(exp(u1 + u2*u3) + 1)",
    "(1 + u1^2)^(3/2) - u2^5",
    "cos(exp(u1)/3)*ln(4 - u2*u3)",
    "u1^2*exp(-u2^2) + sin(3*u3)",
    "sqrt(1 + (u1 - 2*u2)^2) + 1/(5 + u3)",
];

pub fn corpus() -> Vec<(String, Expr)> {
    CORPUS
        .iter()
        .map(|s| (s.to_string(), parse_expr(s, 3).expect("corpus parses")))
        .collect()
}

pub const FD_STEP: f64 = 1e-5;

fn shifted(x: &[f64], k: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[k] += h;
    y
}

/// Central difference of `f` along `k`.
pub fn central(f: impl Fn(&[f64]) -> f64, x: &[f64], k: usize) -> f64 {
    (f(&shifted(x, k, FD_STEP)) - f(&shifted(x, k, -FD_STEP))) / (2.0 * FD_STEP)
}

/// Relative error measured against `scale`, with an absolute floor of 1e-12.
pub fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    let d = (a - b).abs();
    if d <= 1e-12 {
        0.0
    } else {
        d / scale.max(a.abs()).max(b.abs())
    }
}

/// Worst relative disagreement between jet partials and central differences
/// at `x`: first partials against differences of plain evaluation, second
/// partials against differences of the jet gradient.
pub fn fd_disagreement(e: &Expr, x: &[f64]) -> f64 {
    let n = x.len();
    let f = |y: &[f64]| e.eval(y).expect("corpus point in domain");
    let jet = e.jet(x, 2).expect("corpus point in domain");
    let grad_scale = (0..n).map(|k| jet.d(k).abs()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for k in 0..n {
        let fd = central(f, x, k);
        worst = worst.max(rel_err(jet.d(k), fd, f(x).abs()));
        for j in 0..n {
            let g = |y: &[f64]| e.jet(y, 1).expect("in domain").d(j);
            let fd2 = central(g, x, k);
            worst = worst.max(rel_err(jet.d2(j, k), fd2, grad_scale));
        }
    }
    worst
}

/// Random points in `[-1, 1]^n`.
pub fn points(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, n)
}

pub fn point(x: &[f64]) -> Point {
    Point::new(x.to_vec())
}

/// Random expressions in `n` variables built from operations that are
/// smooth and finite everywhere.
pub fn smooth_expr(n: usize) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..n).prop_map(Expr::var),
        (-5i64..=5, 1i64..=4).prop_map(|(a, b)| Expr::rational(a, b)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::raw_add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::raw_sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::raw_mul(a, b)),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| a.sin().exp()),
            inner.clone().prop_map(|a| (a.powi(2) + 1).ln()),
            inner.clone().prop_map(|a| (a.powi(2) + 1).sqrt()),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::raw_div(a, b.powi(2) + 1)),
        ]
    })
}

/// Random expressions in `r3` that stay in `[1/2, ∞)` on the fiber box.
pub fn positive_fiber_expr() -> impl Strategy<Value = Expr> {
    (smooth_expr(1), 1i64..4).prop_map(|(e, c)| {
        // shift variable 0 to r3
        let s =
            parse_expr(&e.to_string().replace("u1", "u3"), 3).expect("printed expression parses");
        s.powi(2) + Expr::rational(c, 2)
    })
}
