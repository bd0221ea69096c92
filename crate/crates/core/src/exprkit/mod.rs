//! Expressions, jets and randomized identity testing.

mod eval;
mod expr;
mod jet;
mod parse;
mod sample;

pub use eval::{eval_jet, eval_scalar, DomainViolation, EvalError};
pub use expr::{Expr, Func, NamedConst, Node};
pub use jet::{Jet, MAX_ORDER};
pub use parse::{parse_expr, parse_expr_with_names, ParseError};
pub use sample::{
    run_plan, PlanError, Point, Rejection, Sample, SampleError, SamplePlan, SampleRun,
    DEFAULT_ABS_FLOOR, DEFAULT_COUNT, DEFAULT_MAX_ATTEMPTS, DEFAULT_REL_TOL, DEFAULT_SEED,
};

use crate::error::CheckError;
use crate::report::{CheckReport, Residual};

/// Fails with a dimension error if any expression uses a variable beyond `n`.
pub fn require_vars<'a>(
    exprs: impl IntoIterator<Item = &'a Expr>,
    n: usize,
) -> Result<(), CheckError> {
    for e in exprs {
        if let Some(k) = e.max_var() {
            if k >= n {
                return Err(CheckError::Dimension(format!(
                    "expression {e} uses u{} but the plan has dimension {n}",
                    k + 1
                )));
            }
        }
    }
    Ok(())
}

/// Randomized test of `e1 == e2`.
///
/// The residual at a point is `max(|e1 - e2| - floor, 0) / max(1, |e1|, |e2|)`,
/// so it stays below `rel_tol` exactly when
/// `|e1 - e2| <= rel_tol * max(1, |e1|, |e2|) + floor`.
pub fn expr_equal_numeric(
    e1: &Expr,
    e2: &Expr,
    plan: &SamplePlan,
) -> Result<CheckReport, CheckError> {
    plan.validate()?;
    require_vars([e1, e2], plan.dim())?;
    let run = run_plan(plan, |p| {
        let a = e1.eval(p.coords())?;
        let b = e2.eval(p.coords())?;
        Ok((a, b))
    })?;
    let mut r = Residual::new("equal", format!("{e1} = {e2}"), plan.rel_tol);
    for s in &run.samples {
        let (a, b) = s.value;
        let scale = 1f64.max(a.abs()).max(b.abs());
        let d = ((a - b).abs() - plan.abs_floor).max(0.0);
        r.observe(d / scale, &s.point);
    }
    let mut report = CheckReport::new("expr_equal_numeric", plan);
    report.push(r.finish());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str, n: usize) -> Expr {
        parse_expr(s, n).unwrap()
    }

    #[test]
    fn exponential_identity_passes() {
        let rep = expr_equal_numeric(
            &p("exp(u1+u2)", 2),
            &p("exp(u1)*exp(u2)", 2),
            &SamplePlan::unit_box(2),
        )
        .unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn distinct_polynomials_fail_with_witness() {
        let rep =
            expr_equal_numeric(&p("u1+u2", 2), &p("u1-u2", 2), &SamplePlan::unit_box(2)).unwrap();
        assert!(!rep.passed);
        let c = &rep.conditions[0];
        assert!(c.max_residual > 0.0);
        assert!(c.witness.is_some());
    }

    #[test]
    fn printed_klein_gordon_exponent_differs_from_corrected() {
        let printed = p("exp(u1/2 + u2/(1-2))", 2);
        let corrected = p("exp(u1 + u2/(1-2))", 2);
        let rep = expr_equal_numeric(&printed, &corrected, &SamplePlan::unit_box(2)).unwrap();
        assert!(!rep.passed);
        // the (1,0) oracle: e^{1/2} vs e^1
        let a = printed.eval(&[1.0, 0.0]).unwrap();
        let b = corrected.eval(&[1.0, 0.0]).unwrap();
        assert!((a - 0.5f64.exp()).abs() < 1e-15 && (b - 1f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn variable_outside_plan_is_rejected() {
        let err =
            expr_equal_numeric(&p("u3", 3), &p("u1", 3), &SamplePlan::unit_box(2)).unwrap_err();
        assert!(matches!(err, CheckError::Dimension(_)));
    }

    #[test]
    fn hostile_domain_is_an_error() {
        let err = expr_equal_numeric(&p("ln(u1-3)", 1), &p("u1", 1), &SamplePlan::unit_box(1))
            .unwrap_err();
        assert!(matches!(err, CheckError::Sample(_)));
    }
}
