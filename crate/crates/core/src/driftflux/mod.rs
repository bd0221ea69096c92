//! The drift-flux example: the two-phase system in conservative and in
//! Riemann-invariant form, its local and nonlocal Hamiltonian operators,
//! the Klein–Gordon solution families behind the nonlocal tails and the
//! constraint residuals those tails must satisfy.
//!
//! Expressions are over `r1, r2, r3` (variables 0, 1, 2). Parameters such
//! as `Θ` and `Λ` must depend on `r3` only.

mod constraints;
mod kg;
mod mutations;
mod operators;
pub mod printed;

pub use constraints::{constraint_residuals, ConstraintEquation, ProlongationAnsatz};
pub use kg::{
    kg_characteristic_j, kg_family_u, kg_family_u_printed, kg_family_v, kg_residual, KLEIN_GORDON,
};
pub use mutations::{mutation_catalog, Mutation, MutationTarget};
pub use operators::{
    assemble_h2_hat, assemble_h3_hat, build_h1_theta, build_h2_hat, build_h3_hat, build_nutku,
    build_remark_operators, check_lambda_independence, default_constant_block, default_lambdas,
    default_theta, ConstantBlock, RemarkVariant,
};

use thiserror::Error;

use crate::error::CheckError;
use crate::exprkit::{parse_expr, Expr, SamplePlan};
use crate::geomtensor::GeomError;
use crate::hydrosys::{HydroSystem, PointChangeMap};
use crate::report::CheckReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DriftError {
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("{what} must depend on r3 only, got {expr}")]
    NotFiberOnly { what: String, expr: String },
    #[error("printed entry is not linear in the derivative symbols: {0}")]
    NotLinear(String),
    #[error("constant block violates {equation}: residual {residual:e}")]
    ConstraintViolation { equation: String, residual: f64 },
    #[error("Λ1, Λ2 and 1 are linearly dependent")]
    DependentLambdas,
    #[error("k = 1/2 puts a pole in the exponent")]
    KleinGordonPole,
    #[error("Ψ^{component} fails the Klein–Gordon equation (residual {residual:e})")]
    NotKleinGordon {
        component: usize,
        residual: f64,
        report: Box<CheckReport>,
    },
    #[error("unknown equation tag {0:?}")]
    UnknownEquation(String),
    #[error("Nutku operators are numbered 1 to 3, got {0}")]
    UnknownNutku(u8),
}

/// Sampling box for the drift-flux presets in Riemann invariants.
pub fn riemann_plan() -> SamplePlan {
    SamplePlan::new(vec![(-0.7, 0.7), (-0.7, 0.7), (0.1, 1.0)]).expect("static box")
}

/// [`riemann_plan`] on the first `n` invariants (`n` ≤ 3).
pub fn preset_plan(n: usize) -> SamplePlan {
    let bounds = riemann_plan().bounds[..n.min(3)].to_vec();
    SamplePlan::new(bounds).expect("static box")
}

/// Sampling box for the conservative variables `(ρ1, ρ2, u)`.
pub fn conservative_plan() -> SamplePlan {
    SamplePlan::new(vec![(0.1, 1.0), (0.1, 1.0), (-1.0, 1.0)]).expect("static box")
}

fn p3(text: &str) -> Expr {
    parse_expr(text, 3).unwrap_or_else(|e| panic!("bad literal {text:?}: {e}"))
}

pub(crate) fn require_fiber(what: &str, e: &Expr) -> Result<(), DriftError> {
    if e.depends_only_on(&[2]) {
        Ok(())
    } else {
        Err(DriftError::NotFiberOnly {
            what: what.into(),
            expr: e.to_string(),
        })
    }
}

/// Diagonal system with speeds `(r1+r2+1, r1+r2-1, r1+r2)`.
pub fn build_system_s() -> HydroSystem {
    HydroSystem::from_speeds(vec![p3("r1 + r2 + 1"), p3("r1 + r2 - 1"), p3("r1 + r2")])
}

/// The conservative form in `(ρ1, ρ2, u)`.
pub fn build_system_s_tilde() -> HydroSystem {
    let rows = vec![
        vec![p3("-u3"), p3("0"), p3("-u1")],
        vec![p3("0"), p3("-u3"), p3("-u2")],
        vec![p3("-1/(u1 + u2)"), p3("-1/(u1 + u2)"), p3("-u3")],
    ];
    HydroSystem::new(rows).expect("static system")
}

/// The first two equations of [`build_system_s`].
pub fn build_system_s0() -> HydroSystem {
    build_system_s().restrict(&[0, 1]).expect("symbolic system")
}

/// `(ρ1, ρ2, u) ↦ (r1, r2, r3)` together with its inverse.
pub fn riemann_map() -> PointChangeMap {
    let forward = vec![
        p3("(u3 + ln(u1 + u2))/2"),
        p3("(u3 - ln(u1 + u2))/2"),
        p3("u2/u1"),
    ];
    let inverse = vec![
        p3("exp(u1 - u2)/(1 + u3)"),
        p3("u3*exp(u1 - u2)/(1 + u3)"),
        p3("u1 + u2"),
    ];
    PointChangeMap::new(forward, Some(inverse)).expect("static map")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprkit::Point;
    use crate::hydrosys::check_change_of_variables;

    #[test]
    fn s_speeds_at_origin() {
        let sp = build_system_s()
            .speeds(&Point::new(vec![0.0; 3]))
            .unwrap()
            .unwrap();
        assert_eq!(sp, vec![1.0, -1.0, 0.0]);
    }

    #[test]
    fn s_tilde_u_row() {
        let v = build_system_s_tilde()
            .eval(&Point::new(vec![1.0, 1.0, 0.0]))
            .unwrap();
        assert_eq!((v[(2, 0)], v[(2, 1)], v[(2, 2)]), (-0.5, -0.5, 0.0));
    }

    #[test]
    fn s0_is_truncation() {
        let s0 = build_system_s0();
        let s = build_system_s();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(s0.entry(i, j), s.entry(i, j));
            }
        }
    }

    #[test]
    fn riemann_map_values() {
        let m = riemann_map();
        assert_eq!(
            m.apply(&Point::new(vec![1.0, 0.0, 0.0])).unwrap().coords(),
            &[0.0, 0.0, 0.0]
        );
        let q = m.apply(&Point::new(vec![1.0, 1.0, 2.0])).unwrap();
        let l2 = 2f64.ln();
        assert!((q[0] - (2.0 + l2) / 2.0).abs() < 1e-15);
        assert!((q[1] - (2.0 - l2) / 2.0).abs() < 1e-15);
        assert_eq!(q[2], 1.0);
    }

    #[test]
    fn riemann_map_rejects_singular_points() {
        let m = riemann_map();
        assert!(m.apply(&Point::new(vec![0.0, 1.0, 0.0])).is_err());
        assert!(m.apply(&Point::new(vec![-1.0, 0.5, 0.0])).is_err());
        assert!(m
            .apply_inverse(&Point::new(vec![0.0, 0.0, -1.0]))
            .unwrap()
            .is_err());
    }

    #[test]
    fn riemann_map_round_trip() {
        let m = riemann_map();
        for p in conservative_plan().points() {
            let back = m.apply_inverse(&m.apply(&p).unwrap()).unwrap().unwrap();
            for (a, b) in p.coords().iter().zip(back.coords()) {
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn riemann_map_diagonalizes() {
        let rep = check_change_of_variables(
            &build_system_s_tilde(),
            &build_system_s(),
            &riemann_map(),
            &conservative_plan(),
        )
        .unwrap();
        assert!(rep.passed, "{rep:?}");
    }
}
