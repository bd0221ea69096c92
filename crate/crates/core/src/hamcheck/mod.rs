//! Hamiltonianity, skew-adjointness and pencil compatibility of first-order
//! operators of hydrodynamic type.
//!
//! Every residual is scale-free: the largest violation of a tensor identity
//! at a point divided by the largest single term entering that identity at
//! that point (with differences below the plan's absolute floor counted as
//! zero). A condition passes iff this stays within the plan tolerance at
//! every sample point.

mod operator;

pub use operator::{LocalOperator, NonlocalOperator};

use std::sync::Arc;

use nalgebra::DMatrix;
use num_rational::Rational64;

use crate::error::CheckError;
use crate::exprkit::{require_vars, run_plan, EvalError, Expr, Point, Rejection, SamplePlan};
use crate::geomtensor::{
    christoffel_from_values, covariant_derivative_with, scaled_det, AffinorField, GeomError,
    PointFrame, Tensor3, Tensor4, DEGENERACY_FLOOR,
};
use crate::hydrosys::HydroSystem;
use crate::report::{normalized, CheckReport, ConditionRecord, Residual};

/// Largest tolerated fraction of degenerate draws.
pub const DEGENERATE_FRACTION_LIMIT: f64 = 0.2;

pub const SYMMETRIC_METRIC: &str = "symmetric-metric";
pub const NONDEGENERATE: &str = "nondegenerate";
pub const SKEW_ADJOINT: &str = "skew-adjoint";
pub const TORSION_FREE: &str = "torsion-free";
pub const METRIC_COMPATIBLE: &str = "metric-compatible";
pub const FLAT: &str = "flat";
pub const AFFINOR_SELF_ADJOINT: &str = "affinor-self-adjoint";
pub const CODAZZI: &str = "codazzi";
pub const GAUSS: &str = "gauss";
pub const AFFINORS_COMMUTE: &str = "affinors-commute";
pub const CONTRAVARIANT_TORSION_FREE: &str = "contravariant-torsion-free";
pub const CONTRAVARIANT_FLAT: &str = "contravariant-flat";

fn describe(id: &str) -> &'static str {
    match id {
        SYMMETRIC_METRIC => "g^{ij} = g^{ji}",
        NONDEGENERATE => "det g^{ij} != 0 (fraction of degenerate draws)",
        SKEW_ADJOINT => "b^{ij}_k + b^{ji}_k = d_k g^{ij}",
        TORSION_FREE => "G^j_{sk} = G^j_{ks} for G^j_{sk} = -g_{is} b^{ij}_k",
        METRIC_COMPATIBLE => "d_k g^{ij} + G^i_{sk} g^{sj} + G^j_{sk} g^{is} = 0",
        FLAT => "R^j_{skl} = 0",
        AFFINOR_SELF_ADJOINT => "g_{ik} w^k_{aj} = g_{jk} w^k_{ai}",
        CODAZZI => "nabla_k w^i_{aj} = nabla_j w^i_{ak}",
        GAUSS => "R^{ij}_{kl} = sum_a e_a (w^i_{al} w^j_{ak} - w^i_{ak} w^j_{al})",
        AFFINORS_COMMUTE => "w_a w_b = w_b w_a",
        CONTRAVARIANT_TORSION_FREE => "g^{is} b^{jk}_s = g^{js} b^{ik}_s",
        CONTRAVARIANT_FLAT => {
            "g^{is} (d_s b^{jk}_l - d_l b^{jk}_s) - b^{ij}_s b^{sk}_l + b^{ik}_s b^{sj}_l = 0"
        }
        _ => "",
    }
}

fn check_plan<'a>(
    plan: &SamplePlan,
    n: usize,
    exprs: impl IntoIterator<Item = &'a Expr>,
) -> Result<(), CheckError> {
    plan.validate()?;
    plan.require_dim(n)?;
    require_vars(exprs, n)
}

fn geom_rejection(e: GeomError) -> Rejection {
    match e {
        GeomError::DegenerateMetric { det, .. } => Rejection::Degenerate { det },
        GeomError::Eval(e) => Rejection::Domain(e),
        GeomError::Shape(s) => Rejection::Domain(EvalError::Domain {
            kind: crate::exprkit::DomainViolation::NonFinite,
            subtree: s,
        }),
    }
}

/// Runs `eval` over the plan and assembles one record per id. `eval` returns
/// residuals for every id except [`NONDEGENERATE`], which is derived from
/// the draws rejected as degenerate and placed right after the first id.
fn assemble(
    name: &str,
    plan: &SamplePlan,
    ids: &[&str],
    with_nondegenerate: bool,
    mut eval: impl FnMut(&Point) -> Result<Vec<f64>, Rejection>,
) -> Result<CheckReport, CheckError> {
    let mut first_degenerate: Option<Point> = None;
    let run = run_plan(plan, |p| {
        let r = eval(p);
        if let Err(Rejection::Degenerate { .. }) = &r {
            first_degenerate.get_or_insert_with(|| p.clone());
        }
        r
    })?;
    let mut report = CheckReport::new(name, plan);
    for (c, id) in ids.iter().enumerate() {
        let mut r = Residual::new(*id, describe(id), plan.rel_tol);
        for s in &run.samples {
            r.observe(s.value[c], &s.point);
        }
        report.push(r.finish());
        if c == 0 && with_nondegenerate {
            let frac = run.degenerate_fraction();
            report.push(ConditionRecord {
                id: NONDEGENERATE.into(),
                description: describe(NONDEGENERATE).into(),
                max_residual: frac,
                threshold: DEGENERATE_FRACTION_LIMIT,
                witness: if frac > 0.0 {
                    first_degenerate.clone()
                } else {
                    None
                },
                passed: frac <= DEGENERATE_FRACTION_LIMIT,
                points: run.attempts,
            });
        }
    }
    if run.degenerate > 0 {
        report.note(format!(
            "degenerate metric at {} of {} drawn points",
            run.degenerate, run.attempts
        ));
    }
    if run.samples.is_empty() {
        report.note("no admissible sample point: remaining conditions not evaluated");
    }
    Ok(report)
}

/// `g^{ij} = g^{ji}` and `b^{ij}_k + b^{ji}_k = ∂_k g^{ij}`.
pub fn check_skew_adjoint(a: &LocalOperator, plan: &SamplePlan) -> Result<CheckReport, CheckError> {
    let n = a.dim();
    check_plan(plan, n, a.exprs())?;
    let floor = plan.abs_floor;
    assemble(
        "skew_adjoint",
        plan,
        &[SYMMETRIC_METRIC, SKEW_ADJOINT],
        false,
        |p| {
            let gj = a.g.jets(p, 1)?;
            let b = a.b.eval(p)?;
            let gu = DMatrix::from_fn(n, n, |i, j| gj[i][j].value());
            let mut diff = 0.0f64;
            let mut scale = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let terms = [b[(i, j, k)], b[(j, i, k)], gj[i][j].d(k)];
                        diff = diff.max((terms[0] + terms[1] - terms[2]).abs());
                        scale = terms.iter().fold(scale, |m, t| m.max(t.abs()));
                    }
                }
            }
            Ok(vec![
                symmetry_residual(&gu, floor),
                normalized(diff, scale, floor),
            ])
        },
    )
}

fn symmetry_residual(m: &DMatrix<f64>, floor: f64) -> f64 {
    let diff = (m - m.transpose()).abs().max();
    normalized(diff, m.abs().max(), floor)
}

#[derive(Clone, Copy)]
struct Mode {
    flat: bool,
    tails: bool,
}

/// Residuals of conditions (i), (iii), (iv) and optionally flatness and the
/// four tail conditions, at one point.
fn operator_residuals(
    a: &LocalOperator,
    tails: &[AffinorField],
    mode: Mode,
    p: &Point,
    floor: f64,
) -> Result<Vec<f64>, Rejection> {
    let n = a.dim();
    let gj = a.g.jets(p, 1)?;
    let gu = DMatrix::from_fn(n, n, |i, j| gj[i][j].value());
    let mut out = vec![symmetry_residual(&gu, floor)];

    let det = scaled_det(&gu);
    if !(det.abs() >= DEGENERACY_FLOOR) {
        return Err(Rejection::Degenerate { det });
    }
    let gl = gu
        .clone()
        .try_inverse()
        .ok_or(Rejection::Degenerate { det })?;
    let b = a.b.eval(p)?;
    let gamma = christoffel_from_values(&gl, &b);

    // torsion
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..n {
        for s in 0..n {
            for k in 0..n {
                diff = diff.max((gamma[(j, s, k)] - gamma[(j, k, s)]).abs());
                for i in 0..n {
                    scale = scale.max((gl[(i, s)] * b[(i, j, k)]).abs());
                }
            }
        }
    }
    out.push(normalized(diff, scale, floor));

    // metric compatibility
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let d = gj[i][j].d(k);
                let mut acc = d;
                scale = scale.max(d.abs());
                for s in 0..n {
                    let t1 = gamma[(i, s, k)] * gu[(s, j)];
                    let t2 = gamma[(j, s, k)] * gu[(i, s)];
                    scale = scale.max(t1.abs()).max(t2.abs());
                    acc += t1 + t2;
                }
                diff = diff.max(acc.abs());
            }
        }
    }
    out.push(normalized(diff, scale, floor));

    if !(mode.flat || mode.tails) {
        return Ok(out);
    }
    let frame = PointFrame::new(&a.g, p).map_err(geom_rejection)?;
    let curv = &frame.curvature;
    if mode.flat {
        out.push(normalized(curv.lowered.max_abs(), curv.scale, floor));
    }
    if !mode.tails {
        return Ok(out);
    }

    let wv = tails
        .iter()
        .map(|w| w.eval(p))
        .collect::<Result<Vec<_>, _>>()?;

    // T1
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for w in &wv {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    let t1 = gl[(i, k)] * w[(k, j)];
                    let t2 = gl[(j, k)] * w[(k, i)];
                    scale = scale.max(t1.abs()).max(t2.abs());
                    acc += t1 - t2;
                }
                diff = diff.max(acc.abs());
            }
        }
    }
    out.push(normalized(diff, scale, floor));

    // T2
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for w in tails {
        let cd = covariant_derivative_with(w, &frame.gamma, p).map_err(geom_rejection)?;
        scale = scale.max(cd.scale);
        diff = diff.max(codazzi_defect(&cd.values));
    }
    out.push(normalized(diff, scale, floor));

    // T3
    let signed: Vec<(f64, DMatrix<f64>)> = tails
        .iter()
        .map(|w| w.sign.value())
        .zip(wv.iter().cloned())
        .collect();
    let (rhs, rhs_scale) = gauss_tail_sum(n, &signed);
    let diff = curv.raised.max_abs_diff(&rhs);
    out.push(normalized(diff, curv.raised_scale.max(rhs_scale), floor));

    // T4
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (x, wa) in wv.iter().enumerate() {
        for wb in &wv[x + 1..] {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for s in 0..n {
                        let t1 = wa[(i, s)] * wb[(s, j)];
                        let t2 = wb[(i, s)] * wa[(s, j)];
                        scale = scale.max(t1.abs()).max(t2.abs());
                        acc += t1 - t2;
                    }
                    diff = diff.max(acc.abs());
                }
            }
        }
    }
    out.push(normalized(diff, scale, floor));
    Ok(out)
}

fn codazzi_defect(d: &Tensor3) -> f64 {
    let n = d.dim();
    let mut m = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                m = m.max((d[(i, j, k)] - d[(i, k, j)]).abs());
            }
        }
    }
    m
}

/// `Σ_α ε_α (w^i_{αl} w^j_{αk} - w^i_{αk} w^j_{αl})` at `(i, j, k, l)`, plus
/// the largest single product.
pub fn gauss_tail_sum(n: usize, tails: &[(f64, DMatrix<f64>)]) -> (Tensor4, f64) {
    let mut out = Tensor4::zeros(n);
    let mut scale = 0.0f64;
    for (eps, w) in tails {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let t1 = w[(i, l)] * w[(j, k)];
                        let t2 = w[(i, k)] * w[(j, l)];
                        scale = scale.max(t1.abs()).max(t2.abs());
                        out[(i, j, k, l)] += eps * (t1 - t2);
                    }
                }
            }
        }
    }
    (out, scale)
}

/// The local operator is Hamiltonian iff `g` is symmetric, nondegenerate and
/// flat, and `b` encodes its Levi-Civita connection.
pub fn check_local_hamiltonian(
    a: &LocalOperator,
    plan: &SamplePlan,
) -> Result<CheckReport, CheckError> {
    check_plan(plan, a.dim(), a.exprs())?;
    let floor = plan.abs_floor;
    let mode = Mode {
        flat: true,
        tails: false,
    };
    assemble(
        "local_hamiltonian",
        plan,
        &[SYMMETRIC_METRIC, TORSION_FREE, METRIC_COMPATIBLE, FLAT],
        true,
        |p| operator_residuals(a, &[], mode, p, floor),
    )
}

/// The conditions for a nonlocal operator with affinor tails to be
/// Hamiltonian: the local ones without flatness, plus self-adjointness of
/// each affinor, Codazzi symmetry, the Gauss equation and commutativity.
pub fn check_ferapontov(
    a: &NonlocalOperator,
    plan: &SamplePlan,
) -> Result<CheckReport, CheckError> {
    check_plan(plan, a.dim(), a.exprs())?;
    let floor = plan.abs_floor;
    let mode = Mode {
        flat: false,
        tails: true,
    };
    assemble(
        "ferapontov",
        plan,
        &[
            SYMMETRIC_METRIC,
            TORSION_FREE,
            METRIC_COMPATIBLE,
            AFFINOR_SELF_ADJOINT,
            CODAZZI,
            GAUSS,
            AFFINORS_COMMUTE,
        ],
        true,
        |p| operator_residuals(&a.local, &a.tails, mode, p, floor),
    )
}

/// The local conditions written without inverting `g`: symmetry,
/// skew-adjointness, and the contravariant torsion and curvature of `b`.
/// For nondegenerate `g` they are equivalent to [`check_local_hamiltonian`];
/// they stay meaningful where `g` is degenerate.
pub fn check_contravariant(
    a: &LocalOperator,
    plan: &SamplePlan,
) -> Result<CheckReport, CheckError> {
    let n = a.dim();
    check_plan(plan, n, a.exprs())?;
    let floor = plan.abs_floor;
    let ids = [
        SYMMETRIC_METRIC,
        SKEW_ADJOINT,
        CONTRAVARIANT_TORSION_FREE,
        CONTRAVARIANT_FLAT,
    ];
    assemble("contravariant", plan, &ids, false, |p| {
        let gj = a.g.jets(p, 1)?;
        let gu = DMatrix::from_fn(n, n, |i, j| gj[i][j].value());
        let bj = (0..n * n * n)
            .map(|x| a.b.get(x / (n * n), (x / n) % n, x % n).jet(p.coords(), 1))
            .collect::<Result<Vec<_>, _>>()?;
        let b = |i: usize, j: usize, k: usize| &bj[(i * n + j) * n + k];

        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let terms = [b(i, j, k).value(), b(j, i, k).value(), gj[i][j].d(k)];
                    diff = diff.max((terms[0] + terms[1] - terms[2]).abs());
                    scale = terms.iter().fold(scale, |m, t| m.max(t.abs()));
                }
            }
        }
        let skew = normalized(diff, scale, floor);

        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = 0.0;
                    for s in 0..n {
                        let t1 = gu[(i, s)] * b(j, k, s).value();
                        let t2 = gu[(j, s)] * b(i, k, s).value();
                        scale = scale.max(t1.abs()).max(t2.abs());
                        acc += t1 - t2;
                    }
                    diff = diff.max(acc.abs());
                }
            }
        }
        let torsion = normalized(diff, scale, floor);

        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = 0.0;
                        for s in 0..n {
                            let terms = [
                                gu[(i, s)] * b(j, k, l).d(s),
                                -gu[(i, s)] * b(j, k, s).d(l),
                                -b(i, j, s).value() * b(s, k, l).value(),
                                b(i, k, s).value() * b(s, j, l).value(),
                            ];
                            for t in terms {
                                scale = scale.max(t.abs());
                                acc += t;
                            }
                        }
                        diff = diff.max(acc.abs());
                    }
                }
            }
        }
        Ok(vec![
            symmetry_residual(&gu, floor),
            skew,
            torsion,
            normalized(diff, scale, floor),
        ])
    })
}

/// Runs [`check_local_hamiltonian`] on `A + λB` for each `λ`; condition ids
/// carry an `@lambda=` suffix. A member whose metric is degenerate at every
/// draw is reported as such and judged by [`check_contravariant`] instead:
/// the Jacobi identity of `A + λB` is polynomial in `λ`, so it holds at
/// such a member whenever it holds for the nondegenerate ones.
pub fn check_pencil_compatibility(
    a: &LocalOperator,
    b: &LocalOperator,
    lambdas: &[f64],
    plan: &SamplePlan,
) -> Result<CheckReport, CheckError> {
    if a.dim() != b.dim() {
        return Err(CheckError::Dimension(
            "pencil members differ in dimension".into(),
        ));
    }
    let mut report = CheckReport::new("pencil_compatibility", plan);
    for &lambda in lambdas {
        let exact = Rational64::approximate_float(lambda)
            .ok_or_else(|| CheckError::Invalid(format!("λ = {lambda} is not representable")))?;
        let member = a.pencil(b, exact)?;
        let mut sub = check_local_hamiltonian(&member, plan)?;
        if sub
            .condition(NONDEGENERATE)
            .is_some_and(|c| c.max_residual >= 1.0)
        {
            report.note(format!(
                "lambda={lambda}: metric degenerate at every draw, contravariant conditions used"
            ));
            sub = check_contravariant(&member, plan)?;
        }
        for mut c in sub.conditions {
            c.id = format!("{}@lambda={lambda}", c.id);
            report.push(c);
        }
        for note in sub.notes {
            report.note(format!("lambda={lambda}: {note}"));
        }
    }
    Ok(report)
}

/// The system `u_t = A δH/δu` for a density `H(u)`:
/// `v^i_k = g^{ij} ∂_j ∂_k H + b^{ij}_k ∂_j H`.
pub fn hamiltonian_flow(
    a: &LocalOperator,
    h: &Expr,
    plan: &SamplePlan,
) -> Result<HydroSystem, CheckError> {
    let n = a.dim();
    check_plan(plan, n, a.exprs().chain([h]))?;
    let (op, h) = (a.clone(), h.clone());
    Ok(HydroSystem::computed(
        n,
        false,
        Arc::new(move |p: &Point| {
            let hj = h.jet(p.coords(), 2)?;
            let g = op.g.eval(p)?;
            let b = op.b.eval(p)?;
            Ok(DMatrix::from_fn(n, n, |i, k| {
                (0..n)
                    .map(|j| g[(i, j)] * hj.d2(j, k) + b[(i, j, k)] * hj.d(j))
                    .sum()
            }))
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprkit::parse_expr;
    use crate::geomtensor::{ConnectionField, MetricField, Sign};

    fn e(s: &str, n: usize) -> Expr {
        parse_expr(s, n).unwrap()
    }

    fn dx() -> LocalOperator {
        LocalOperator::new(
            MetricField::diagonal(vec![Expr::one()]),
            ConnectionField::zeros(1),
        )
        .unwrap()
    }

    #[test]
    fn d_x_is_skew_and_hamiltonian() {
        let plan = SamplePlan::unit_box(1);
        assert!(check_skew_adjoint(&dx(), &plan).unwrap().passed);
        let rep = check_local_hamiltonian(&dx(), &plan).unwrap();
        assert!(rep.passed, "{rep:#?}");
        let ids: Vec<_> = rep.conditions.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(
            ids,
            [
                SYMMETRIC_METRIC,
                NONDEGENERATE,
                TORSION_FREE,
                METRIC_COMPATIBLE,
                FLAT
            ]
        );
    }

    #[test]
    fn zero_metric_fails_nondegeneracy_without_error() {
        let op = LocalOperator::new(
            MetricField::diagonal(vec![Expr::zero()]),
            ConnectionField::zeros(1),
        )
        .unwrap();
        let rep = check_local_hamiltonian(&op, &SamplePlan::unit_box(1).with_count(10)).unwrap();
        let c = rep.condition(NONDEGENERATE).unwrap();
        assert!(!c.passed && c.max_residual == 1.0 && c.witness.is_some());
        assert!(!rep.passed);
    }

    #[test]
    fn curved_metric_fails_flatness_only() {
        // round-sphere inverse metric with its Levi-Civita b
        let g = MetricField::diagonal(vec![Expr::one(), e("sin(u1)^(-2)", 2)]);
        let plan = SamplePlan::new(vec![(0.5, 1.2), (-1.0, 1.0)]).unwrap();
        let mut b = ConnectionField::zeros(2);
        let p0 = Point::new(vec![0.7, 0.1]);
        // derive b = -g^{is} Γ^j_{sk} symbolically: Γ^1_{22} = -sin cos, Γ^2_{12} = Γ^2_{21} = cot
        b.set(0, 1, 1, e("-cos(u1)/sin(u1)", 2));
        b.set(1, 0, 1, e("cos(u1)/sin(u1)", 2));
        b.set(1, 1, 0, e("-sin(u1)^(-2)*cos(u1)/sin(u1)", 2));
        let op = LocalOperator::new(g.clone(), b).unwrap();
        let gamma = crate::geomtensor::levi_civita(&g, &p0).unwrap();
        let from_b = crate::geomtensor::christoffel_from_b(&op.g, &op.b, &p0).unwrap();
        assert!(gamma.max_abs_diff(&from_b) < 1e-12, "{gamma:?} {from_b:?}");
        let rep = check_local_hamiltonian(&op, &plan).unwrap();
        let failed: Vec<_> = rep.failed().map(|c| c.id.as_str()).collect();
        assert_eq!(failed, [FLAT]);
        // the 2-sphere is exactly the Gauss equation with one unit tail: R = w ⊗ w with w = id
        let tail = AffinorField::diagonal(Sign::Plus, vec![Expr::one(), Expr::one()]);
        let nl = NonlocalOperator::new(op, vec![tail]).unwrap();
        let rep = check_ferapontov(&nl, &plan).unwrap();
        assert!(rep.passed, "{rep:#?}");
        let mut flipped = nl.clone();
        flipped.tails[0].sign = Sign::Minus;
        assert!(
            !check_ferapontov(&flipped, &plan)
                .unwrap()
                .condition(GAUSS)
                .unwrap()
                .passed
        );
    }

    #[test]
    fn contravariant_form_sees_curvature_without_inverting() {
        let g = MetricField::diagonal(vec![Expr::one(), e("sin(u1)^(-2)", 2)]);
        let plan = SamplePlan::new(vec![(0.5, 1.2), (-1.0, 1.0)]).unwrap();
        let mut b = ConnectionField::zeros(2);
        b.set(0, 1, 1, e("-cos(u1)/sin(u1)", 2));
        b.set(1, 0, 1, e("cos(u1)/sin(u1)", 2));
        b.set(1, 1, 0, e("-sin(u1)^(-2)*cos(u1)/sin(u1)", 2));
        let rep = check_contravariant(&LocalOperator::new(g, b).unwrap(), &plan).unwrap();
        let failed: Vec<_> = rep.failed().map(|c| c.id.as_str()).collect();
        assert_eq!(failed, [CONTRAVARIANT_FLAT]);
    }

    #[test]
    fn degenerate_pencil_member_falls_back_to_contravariant_form() {
        // (diag(1, 0) + λ diag(0, 1)) with b = 0 is degenerate only at λ = 0
        let a = LocalOperator::new(
            MetricField::diagonal(vec![Expr::one(), Expr::zero()]),
            ConnectionField::zeros(2),
        )
        .unwrap();
        let b = LocalOperator::new(
            MetricField::diagonal(vec![Expr::zero(), Expr::one()]),
            ConnectionField::zeros(2),
        )
        .unwrap();
        let rep =
            check_pencil_compatibility(&a, &b, &[0.0, 1.0], &SamplePlan::unit_box(2)).unwrap();
        assert!(rep.passed, "{rep:#?}");
        assert!(rep.condition("contravariant-flat@lambda=0").is_some());
        assert!(rep.condition("flat@lambda=1").is_some());
        assert!(rep
            .notes
            .iter()
            .any(|n| n.starts_with("lambda=0: metric degenerate")));
    }

    #[test]
    fn flow_of_quadratic_density() {
        let plan = SamplePlan::unit_box(1);
        let s = hamiltonian_flow(&dx(), &e("u1^2/2", 1), &plan).unwrap();
        let v = s.eval(&Point::new(vec![0.3])).unwrap();
        assert!((v[(0, 0)] - 1.0).abs() < 1e-15);
        let id2 = LocalOperator::new(
            MetricField::diagonal(vec![Expr::one(), Expr::one()]),
            ConnectionField::zeros(2),
        )
        .unwrap();
        let s = hamiltonian_flow(&id2, &e("u1*u2", 2), &SamplePlan::unit_box(2)).unwrap();
        let v = s.eval(&Point::new(vec![0.3, -0.8])).unwrap();
        assert_eq!(v, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn tail_sum_is_antisymmetric() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -0.5, 3.0]);
        let (t, _) = gauss_tail_sum(2, &[(1.0, w.clone()), (-1.0, w.transpose())]);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        assert_eq!(t[(i, j, k, l)], -t[(i, j, l, k)]);
                        assert_eq!(t[(i, j, k, l)], -t[(j, i, k, l)]);
                    }
                }
            }
        }
    }
}
