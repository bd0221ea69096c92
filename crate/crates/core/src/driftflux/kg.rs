use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::error::CheckError;
use crate::exprkit::{require_vars, run_plan, Expr, SamplePlan};
use crate::report::{normalized, term_scale, CheckReport, Residual};

use super::DriftError;

pub const KLEIN_GORDON: &str = "klein-gordon";

fn require_base(psi: &Expr) -> Result<(), CheckError> {
    if psi.depends_only_on(&[0, 1]) {
        Ok(())
    } else {
        Err(CheckError::Invalid(format!(
            "Ψ must depend on r1, r2 only, got {psi}"
        )))
    }
}

/// Residual of `2Ψ_{r1r2} - Ψ_{r2} + Ψ_{r1} = 0`.
pub fn kg_residual(psi: &Expr, plan: &SamplePlan) -> Result<CheckReport, CheckError> {
    require_base(psi)?;
    plan.validate()?;
    if plan.dim() < 2 {
        return Err(CheckError::Dimension(format!(
            "plan has dimension {}, need at least 2",
            plan.dim()
        )));
    }
    require_vars([psi], plan.dim())?;
    let run = run_plan(plan, |p| {
        let j = psi.jet(p.coords(), 2)?;
        let terms = [2.0 * j.d2(0, 1), -j.d(1), j.d(0)];
        Ok(normalized(
            terms.iter().sum(),
            term_scale(terms),
            plan.abs_floor,
        ))
    })?;
    let mut r = Residual::new(
        KLEIN_GORDON,
        format!("2Ψ_12 - Ψ_2 + Ψ_1 = 0 for Ψ = {psi}"),
        plan.rel_tol,
    );
    for s in &run.samples {
        r.observe(s.value, &s.point);
    }
    let mut report = CheckReport::new("klein_gordon", plan);
    report.push(r.finish());
    Ok(report)
}

fn exponent(k: Rational64, r1_factor: Rational64) -> Result<Expr, DriftError> {
    let den = Rational64::one() - Rational64::from_integer(2) * k;
    if den.is_zero() {
        return Err(DriftError::KleinGordonPole);
    }
    Ok(Expr::constant(k * r1_factor) * Expr::var(0) + Expr::constant(k / den) * Expr::var(1))
}

/// `e^{k r1 + k r2/(1-2k)}`, a solution for every `k ≠ 1/2`.
pub fn kg_family_u(k: Rational64) -> Result<Expr, DriftError> {
    let x = exponent(k, Rational64::one())?;
    Ok(if x.is_zero() { Expr::one() } else { x.exp() })
}

/// The displayed family `e^{k r1/2 + k r2/(1-2k)}`, which solves the equation
/// only for `k = 0`.
pub fn kg_family_u_printed(k: Rational64) -> Result<Expr, DriftError> {
    Ok(exponent(k, Rational64::new(1, 2))?.exp())
}

/// `((1-2k)² r1 + r2) e^{k r1 + k r2/(1-2k)}`.
pub fn kg_family_v(k: Rational64) -> Result<Expr, DriftError> {
    let s = Rational64::one() - Rational64::from_integer(2) * k;
    let lin = Expr::constant(s * s) * Expr::var(0) + Expr::var(1);
    Ok(lin * kg_family_u(k)?)
}

/// `J[Ψ] = Ψ (r1 + r2) - 2 r1 Ψ_{r1} + 2 r2 Ψ_{r2}`, which maps solutions to
/// solutions.
pub fn kg_characteristic_j(psi: &Expr) -> Expr {
    let (r1, r2) = (Expr::var(0), Expr::var(1));
    psi * (&r1 + &r2) - Expr::int(2) * &r1 * psi.derivative(0)
        + Expr::int(2) * &r2 * psi.derivative(1)
}
