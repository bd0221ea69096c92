mod common;

use common::{point, points, smooth_expr};
use hydroham::driftflux::{
    build_h1_theta, build_h2_hat, build_h3_hat, build_nutku, build_remark_operators,
    default_constant_block, default_lambdas, default_theta, preset_plan, RemarkVariant,
};
use hydroham::exprkit::{parse_expr, Expr};
use hydroham::geomtensor::{christoffel_from_b, levi_civita, MetricField, PointFrame};
use hydroham::hamcheck::LocalOperator;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Symmetric, diagonally dominant and so positive definite on the whole space.
fn random_metric(n: usize) -> impl Strategy<Value = MetricField> {
    (
        proptest::collection::vec(smooth_expr(n), n),
        proptest::collection::vec(smooth_expr(n), n * (n - 1) / 2),
    )
        .prop_map(move |(diag, off)| {
            let mut rows = vec![vec![Expr::zero(); n]; n];
            for i in 0..n {
                rows[i][i] = diag[i].powi(2) + n as i64;
            }
            let mut it = off.into_iter();
            for i in 0..n {
                for j in i + 1..n {
                    let e = Expr::rational(1, 2) * it.next().unwrap().sin();
                    rows[i][j] = e.clone();
                    rows[j][i] = e;
                }
            }
            MetricField::new(rows).unwrap()
        })
}

fn metric_and_point() -> impl Strategy<Value = (MetricField, Vec<f64>)> {
    (2usize..=3).prop_flat_map(|n| (random_metric(n), points(n)))
}

/// Fourth-order central difference, accurate to ~1e-12 at h = 1e-3.
fn d4(f: impl Fn(&[f64]) -> DMatrix<f64>, x: &[f64], k: usize) -> DMatrix<f64> {
    let h = 1e-3;
    let at = |t: f64| {
        let mut y = x.to_vec();
        y[k] += t;
        f(&y)
    };
    (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn curvature_antisymmetry((g, x) in metric_and_point()) {
        let f = PointFrame::new(&g, &point(&x)).unwrap();
        let n = g.dim();
        let (lo, up) = (&f.curvature.lowered, &f.curvature.raised);
        let tol_lo = 1e-10 * f.curvature.scale.max(1e-300);
        let tol_up = 1e-10 * f.curvature.raised_scale.max(1e-300);
        for a in 0..n { for b in 0..n { for c in 0..n { for d in 0..n {
            prop_assert!((lo[(a, b, c, d)] + lo[(a, b, d, c)]).abs() <= tol_lo);
            prop_assert!((up[(a, b, c, d)] + up[(b, a, c, d)]).abs() <= tol_up);
        }}}}
    }

    #[test]
    fn first_bianchi((g, x) in metric_and_point()) {
        let f = PointFrame::new(&g, &point(&x)).unwrap();
        let n = g.dim();
        let r = &f.curvature.lowered;
        let tol = 1e-9 * f.curvature.scale.max(1e-300);
        for j in 0..n { for s in 0..n { for k in 0..n { for l in 0..n {
            let cyc = r[(j, s, k, l)] + r[(j, k, l, s)] + r[(j, l, s, k)];
            prop_assert!(cyc.abs() <= tol, "{cyc}");
        }}}}
    }

    #[test]
    fn levi_civita_is_metric_compatible((g, x) in metric_and_point()) {
        let n = g.dim();
        let gamma = levi_civita(&g, &point(&x)).unwrap();
        let lower = |y: &[f64]| g.eval(&point(y)).unwrap().try_inverse().unwrap();
        let gl = lower(&x);
        for k in 0..n {
            let dg = d4(lower, &x, k);
            for i in 0..n {
                for j in 0..n {
                    let mut acc = dg[(i, j)];
                    let mut scale = dg[(i, j)].abs();
                    for s in 0..n {
                        let t1 = gamma[(s, i, k)] * gl[(s, j)];
                        let t2 = gamma[(s, j, k)] * gl[(i, s)];
                        scale = scale.max(t1.abs()).max(t2.abs());
                        acc -= t1 + t2;
                    }
                    prop_assert!(acc.abs() <= 1e-9 * scale.max(1.0), "{acc} vs {scale}");
                }
            }
        }
    }
}

fn passing_presets() -> Vec<(String, LocalOperator)> {
    let mut out = Vec::new();
    for k in 1..=3 {
        out.push((format!("H{k}"), build_nutku(k).unwrap()));
    }
    for t in ["1", "r3", "exp(r3)"] {
        out.push((
            format!("H1_theta({t})"),
            build_h1_theta(&parse_expr(t, 3).unwrap()).unwrap(),
        ));
    }
    let (l1, l2) = default_lambdas();
    let cb = default_constant_block();
    out.push((
        "H2_hat".into(),
        build_h2_hat(&default_theta(), &l1, &l2, &cb).unwrap().local,
    ));
    out.push((
        "H3_hat".into(),
        build_h3_hat(&default_theta(), &l1, &l2, &cb).unwrap().local,
    ));
    for t in ["1", "r3"] {
        let ops =
            build_remark_operators(&parse_expr(t, 3).unwrap(), RemarkVariant::Corrected).unwrap();
        for (i, a) in ops.into_iter().enumerate() {
            out.push((format!("remark H{}({t})", i + 1), a));
        }
    }
    out
}

#[test]
fn christoffel_two_paths_agree_on_presets() {
    for (name, a) in passing_presets() {
        for p in preset_plan(a.dim()).points() {
            let from_b = christoffel_from_b(&a.g, &a.b, &p).unwrap();
            let lc = levi_civita(&a.g, &p).unwrap();
            let scale = lc.max_abs().max(1.0);
            assert!(from_b.max_abs_diff(&lc) <= 1e-9 * scale, "{name} at {p}");
        }
    }
}
