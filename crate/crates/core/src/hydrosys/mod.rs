//! Hydrodynamic-type systems `u^i_t = v^i_j(u) u^j_x`, conserved currents,
//! point changes of variables and reciprocal transformations.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::CheckError;
use crate::exprkit::{require_vars, run_plan, EvalError, Expr, Point, Rejection, SamplePlan};
use crate::geomtensor::DEGENERACY_FLOOR;
use crate::report::{normalized, term_scale, CheckReport, Residual};

pub type VelocityFn = Arc<dyn Fn(&Point) -> Result<DMatrix<f64>, EvalError> + Send + Sync>;

#[derive(Clone)]
pub enum Velocity {
    /// Row-major `v^i_j`.
    Exprs(Vec<Expr>),
    /// Values computed from other fields at each point.
    Computed(VelocityFn),
}

/// `u^i_t = v^i_j(u) u^j_x`.
#[derive(Clone)]
pub struct HydroSystem {
    n: usize,
    velocity: Velocity,
    diagonal: bool,
}

impl fmt::Debug for HydroSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("HydroSystem");
        d.field("n", &self.n).field("diagonal", &self.diagonal);
        match &self.velocity {
            Velocity::Exprs(v) => d.field("v", v),
            Velocity::Computed(_) => d.field("v", &"<computed>"),
        };
        d.finish()
    }
}

impl HydroSystem {
    pub fn new(rows: Vec<Vec<Expr>>) -> Result<Self, CheckError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(CheckError::Dimension("system matrix must be square".into()));
        }
        let entries: Vec<Expr> = rows.into_iter().flatten().collect();
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || entries[i * n + j].is_zero()));
        Ok(HydroSystem {
            n,
            velocity: Velocity::Exprs(entries),
            diagonal,
        })
    }

    /// Diagonal system with `v^i_i = diag[i]`.
    pub fn diagonal(diag: Vec<Expr>) -> Self {
        let n = diag.len();
        let mut entries = vec![Expr::zero(); n * n];
        for (i, d) in diag.into_iter().enumerate() {
            entries[i * n + i] = d;
        }
        HydroSystem {
            n,
            velocity: Velocity::Exprs(entries),
            diagonal: true,
        }
    }

    /// From characteristic speeds in the `r^i_t + λ_i r^i_x = 0` form.
    pub fn from_speeds(speeds: Vec<Expr>) -> Self {
        HydroSystem::diagonal(speeds.into_iter().map(Expr::neg).collect())
    }

    pub fn computed(n: usize, diagonal: bool, f: VelocityFn) -> Self {
        HydroSystem {
            n,
            velocity: Velocity::Computed(f),
            diagonal,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn velocity(&self) -> &Velocity {
        &self.velocity
    }

    /// Row-major entries when the system is symbolic.
    pub fn entries(&self) -> Option<&[Expr]> {
        match &self.velocity {
            Velocity::Exprs(v) => Some(v),
            Velocity::Computed(_) => None,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<&Expr> {
        self.entries().map(|v| &v[i * self.n + j])
    }

    /// Symbolic `(i, j)` sub-system; `None` for computed systems.
    pub fn restrict(&self, idx: &[usize]) -> Option<HydroSystem> {
        let rows = idx
            .iter()
            .map(|&i| {
                idx.iter()
                    .map(|&j| self.entry(i, j).cloned())
                    .collect::<Option<Vec<_>>>()
            })
            .collect::<Option<Vec<_>>>()?;
        HydroSystem::new(rows).ok()
    }

    pub fn eval(&self, p: &Point) -> Result<DMatrix<f64>, EvalError> {
        match &self.velocity {
            Velocity::Exprs(v) => {
                let vals = v
                    .iter()
                    .map(|e| e.eval(p.coords()))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(DMatrix::from_row_slice(self.n, self.n, &vals))
            }
            Velocity::Computed(f) => f(p),
        }
    }

    /// Characteristic speeds `λ_i = -v^i_i` of a diagonal system.
    pub fn speeds(&self, p: &Point) -> Result<Option<Vec<f64>>, EvalError> {
        if !self.diagonal {
            return Ok(None);
        }
        let v = self.eval(p)?;
        Ok(Some((0..self.n).map(|i| -v[(i, i)]).collect()))
    }
}

/// `D_t ρ + D_x σ = 0` on solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedCurrent {
    pub rho: Expr,
    pub sigma: Expr,
}

impl ConservedCurrent {
    pub fn new(rho: Expr, sigma: Expr) -> Self {
        ConservedCurrent { rho, sigma }
    }

    /// The current whose closed 1-form is `sigma_hat dt + rho dx`.
    pub fn from_one_form(rho: Expr, sigma_hat: Expr) -> Self {
        ConservedCurrent {
            rho,
            sigma: Expr::neg(sigma_hat),
        }
    }

    /// The `dt` coefficient of the associated closed 1-form.
    pub fn sigma_hat(&self) -> Expr {
        Expr::neg(self.sigma.clone())
    }
}

/// New variables as functions of old ones.
#[derive(Debug, Clone, PartialEq)]
pub struct PointChangeMap {
    pub forward: Vec<Expr>,
    pub inverse: Option<Vec<Expr>>,
}

impl PointChangeMap {
    pub fn new(forward: Vec<Expr>, inverse: Option<Vec<Expr>>) -> Result<Self, CheckError> {
        if let Some(inv) = &inverse {
            if inv.len() != forward.len() {
                return Err(CheckError::Dimension(
                    "inverse map has a different dimension".into(),
                ));
            }
        }
        Ok(PointChangeMap { forward, inverse })
    }

    pub fn identity(n: usize) -> Self {
        let vars: Vec<Expr> = (0..n).map(Expr::var).collect();
        PointChangeMap {
            forward: vars.clone(),
            inverse: Some(vars),
        }
    }

    pub fn dim(&self) -> usize {
        self.forward.len()
    }

    pub fn apply(&self, p: &Point) -> Result<Point, EvalError> {
        Ok(Point::new(
            self.forward
                .iter()
                .map(|e| e.eval(p.coords()))
                .collect::<Result<_, _>>()?,
        ))
    }

    pub fn apply_inverse(&self, p: &Point) -> Option<Result<Point, EvalError>> {
        let inv = self.inverse.as_ref()?;
        Some(
            inv.iter()
                .map(|e| e.eval(p.coords()))
                .collect::<Result<Vec<_>, _>>()
                .map(Point::new),
        )
    }

    /// Swap forward and inverse.
    pub fn inverted(&self) -> Option<PointChangeMap> {
        Some(PointChangeMap {
            forward: self.inverse.clone()?,
            inverse: Some(self.forward.clone()),
        })
    }

    pub fn jacobian(&self, p: &Point) -> Result<DMatrix<f64>, EvalError> {
        let n = self.dim();
        let mut j = DMatrix::zeros(n, n);
        for (i, e) in self.forward.iter().enumerate() {
            let jet = e.jet(p.coords(), 1)?;
            for k in 0..n {
                j[(i, k)] = jet.d(k);
            }
        }
        Ok(j)
    }
}

fn require_system_dim(s: &HydroSystem, plan: &SamplePlan) -> Result<(), CheckError> {
    plan.validate()?;
    if s.dim() != plan.dim() {
        return Err(CheckError::Dimension(format!(
            "system has dimension {}, plan {}",
            s.dim(),
            plan.dim()
        )));
    }
    if let Some(v) = s.entries() {
        require_vars(v, s.dim())?;
    }
    Ok(())
}

/// Checks `∂_k ρ v^k_l + ∂_l σ = 0` for every `l`.
pub fn check_conserved_current(
    s: &HydroSystem,
    c: &ConservedCurrent,
    plan: &SamplePlan,
) -> Result<CheckReport, CheckError> {
    require_system_dim(s, plan)?;
    require_vars([&c.rho, &c.sigma], s.dim())?;
    let n = s.dim();
    let run = run_plan(plan, |p| {
        let v = s.eval(p)?;
        let rho = c.rho.jet(p.coords(), 1)?;
        let sigma = c.sigma.jet(p.coords(), 1)?;
        let mut worst = 0.0f64;
        for l in 0..n {
            let terms: Vec<f64> = (0..n)
                .map(|k| rho.d(k) * v[(k, l)])
                .chain([sigma.d(l)])
                .collect();
            let sum: f64 = terms.iter().sum();
            worst = worst.max(normalized(sum, term_scale(terms), plan.abs_floor));
        }
        Ok(worst)
    })?;
    let mut r = Residual::new(
        "conservation",
        format!("D_t({}) + D_x({}) = 0", c.rho, c.sigma),
        plan.rel_tol,
    );
    for smp in &run.samples {
        r.observe(smp.value, &smp.point);
    }
    let mut report = CheckReport::new("conserved_current", plan);
    report.push(r.finish());
    Ok(report)
}

/// Checks `J v_old(u) = v_new(m(u)) J` where `J` is the Jacobian of `m`.
///
/// Points where `|det J|` falls below the degeneracy floor are redrawn.
pub fn check_change_of_variables(
    s_old: &HydroSystem,
    s_new: &HydroSystem,
    m: &PointChangeMap,
    plan: &SamplePlan,
) -> Result<CheckReport, CheckError> {
    require_system_dim(s_old, plan)?;
    let n = s_old.dim();
    if s_new.dim() != n || m.dim() != n {
        return Err(CheckError::Dimension(
            "systems and map must share a dimension".into(),
        ));
    }
    require_vars(&m.forward, n)?;
    let run = run_plan(plan, |p| {
        let jac = m.jacobian(p)?;
        let det = crate::geomtensor::scaled_det(&jac);
        if !(det.abs() >= DEGENERACY_FLOOR) {
            return Err(Rejection::Degenerate { det });
        }
        let q = m.apply(p)?;
        let v_old = s_old.eval(p)?;
        let v_new = s_new.eval(&q)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for l in 0..n {
                let lhs: Vec<f64> = (0..n).map(|k| jac[(i, k)] * v_old[(k, l)]).collect();
                let rhs: Vec<f64> = (0..n).map(|k| v_new[(i, k)] * jac[(k, l)]).collect();
                let diff = lhs.iter().sum::<f64>() - rhs.iter().sum::<f64>();
                let scale = term_scale(lhs.iter().chain(&rhs).copied());
                worst = worst.max(normalized(diff, scale, plan.abs_floor));
            }
        }
        Ok(worst)
    })?;
    let mut r = Residual::new("conjugacy", "J v_old = v_new(m) J", plan.rel_tol);
    for smp in &run.samples {
        r.observe(smp.value, &smp.point);
    }
    let mut report = CheckReport::new("change_of_variables", plan);
    report.push(r.finish());
    if run.degenerate > 0 {
        report.note(format!(
            "singular Jacobian at {} of {} drawn points; those points were redrawn",
            run.degenerate, run.attempts
        ));
    }
    if run.samples.len() < plan.count {
        report.note(format!(
            "{} sample indices dropped after exhausting redraws",
            plan.count - run.samples.len()
        ));
    }
    Ok(report)
}

/// A transformed system together with the checks that licensed it.
#[derive(Debug, Clone)]
pub struct ReciprocalOutcome {
    pub system: HydroSystem,
    pub checks: Vec<CheckReport>,
}

/// Reciprocal transformation `dt̃ = σ̂1 dt + ρ1 dx`, `dx̃ = σ̂2 dt + ρ2 dx`
/// with `σ̂ = -σ`.
///
/// The new velocity is `(σ̂1 I - ρ1 v)^{-1} (ρ2 v - σ̂2 I)`. Fails if either
/// current is not conserved or `σ̂1 I - ρ1 v` is singular somewhere on the plan.
pub fn reciprocal_transform_system(
    s: &HydroSystem,
    c1: &ConservedCurrent,
    c2: &ConservedCurrent,
    plan: &SamplePlan,
) -> Result<ReciprocalOutcome, ReciprocalError> {
    let r1 = check_conserved_current(s, c1, plan)?;
    let r2 = check_conserved_current(s, c2, plan)?;
    if !r1.passed || !r2.passed {
        return Err(ReciprocalError::NotConserved {
            reports: vec![r1, r2],
        });
    }
    let n = s.dim();
    let sys = s.clone();
    let (rho1, sh1, rho2, sh2) = (
        c1.rho.clone(),
        c1.sigma_hat(),
        c2.rho.clone(),
        c2.sigma_hat(),
    );
    let f: VelocityFn = Arc::new(move |p: &Point| {
        let x = p.coords();
        let v = sys.eval(p)?;
        let (a1, b1, a2, b2) = (rho1.eval(x)?, sh1.eval(x)?, rho2.eval(x)?, sh2.eval(x)?);
        let id = DMatrix::<f64>::identity(n, n);
        let den = &id * b1 - &v * a1;
        let num = &v * a2 - &id * b2;
        let inv = den.try_inverse().ok_or(EvalError::Domain {
            kind: crate::exprkit::DomainViolation::DivisionByZero,
            subtree: "σ̂1 I - ρ1 v".into(),
        })?;
        Ok(inv * num)
    });
    let out = HydroSystem::computed(n, s.is_diagonal(), f);

    // the denominator must stay invertible on the whole plan
    let den_check = run_plan(plan, |p| {
        let v = s.eval(p)?;
        let a1 = c1.rho.eval(p.coords())?;
        let b1 = c1.sigma_hat().eval(p.coords())?;
        let den = DMatrix::<f64>::identity(n, n) * b1 - v * a1;
        Ok(crate::geomtensor::scaled_det(&den))
    })
    .map_err(CheckError::from)?;
    if let Some(bad) = den_check
        .samples
        .iter()
        .find(|smp| !(smp.value.abs() >= DEGENERACY_FLOOR))
    {
        return Err(ReciprocalError::VanishingDenominator {
            point: bad.point.clone(),
        });
    }
    Ok(ReciprocalOutcome {
        system: out,
        checks: vec![r1, r2],
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReciprocalError {
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("a current fails conservation on the system")]
    NotConserved { reports: Vec<CheckReport> },
    #[error("σ̂1 - ρ1 v is singular at {point}")]
    VanishingDenominator { point: Point },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprkit::parse_expr;

    fn e(s: &str) -> Expr {
        parse_expr(s, 3).unwrap()
    }

    fn s_system() -> HydroSystem {
        HydroSystem::from_speeds(vec![e("r1+r2+1"), e("r1+r2-1"), e("r1+r2")])
    }

    fn box3() -> SamplePlan {
        SamplePlan::new(vec![(-0.7, 0.7), (-0.7, 0.7), (0.1, 1.0)]).unwrap()
    }

    #[test]
    fn trivial_current_is_conserved() {
        let rep =
            check_conserved_current(&s_system(), &ConservedCurrent::new(e("1"), e("0")), &box3())
                .unwrap();
        assert!(rep.passed);
    }

    #[test]
    fn exponential_current_on_s() {
        let c = ConservedCurrent::new(e("exp(r1-r2)"), e("(r1+r2)*exp(r1-r2)"));
        assert!(
            check_conserved_current(&s_system(), &c, &box3())
                .unwrap()
                .passed
        );
        let bad = ConservedCurrent::new(e("r1"), e("0"));
        let rep = check_conserved_current(&s_system(), &bad, &box3()).unwrap();
        assert!(!rep.passed);
        // ∂_1ρ v^1_1 = -(r1+r2+1): normalized residual is 1 wherever it is nonzero
        assert!((rep.conditions[0].max_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_change_of_variables() {
        let s = s_system();
        let rep = check_change_of_variables(&s, &s, &PointChangeMap::identity(3), &box3()).unwrap();
        assert!(rep.passed);
    }

    #[test]
    fn identity_reciprocal_pair_is_identity() {
        let s = s_system();
        let c1 = ConservedCurrent::from_one_form(e("0"), e("1"));
        let c2 = ConservedCurrent::from_one_form(e("1"), e("0"));
        let out = reciprocal_transform_system(&s, &c1, &c2, &box3()).unwrap();
        for p in box3().points() {
            let a = s.eval(&p).unwrap();
            let b = out.system.eval(&p).unwrap();
            assert!((a - b).abs().max() <= 1e-12);
        }
    }

    #[test]
    fn non_conserved_current_is_refused() {
        let s = s_system();
        let c1 = ConservedCurrent::from_one_form(e("0"), e("1"));
        let c2 = ConservedCurrent::new(e("r1"), e("0"));
        let res = reciprocal_transform_system(&s, &c1, &c2, &box3());
        assert!(matches!(res, Err(ReciprocalError::NotConserved { .. })));
    }
}
