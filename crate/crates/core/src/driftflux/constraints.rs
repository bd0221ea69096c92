use std::fmt;
use std::str::FromStr;

use crate::error::CheckError;
use crate::exprkit::{parse_expr, run_plan, EvalError, Expr, Point, SamplePlan};
use crate::geomtensor::{AffinorField, Sign};
use crate::report::{normalized, term_scale, CheckReport, Residual};

use super::kg::kg_residual;
use super::printed::{e12, e21};
use super::{require_fiber, ConstantBlock, DriftError};

/// Tail data `w_α = e^{r2-r1} diag(Ψ^α_{r1}, -Ψ^α_{r2}, Φ^α + Ψ^α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlongationAnsatz {
    pub eps: [Sign; 3],
    /// Functions of `r1, r2`.
    pub psi: [Expr; 3],
    /// Functions of `r3`.
    pub phi: [Expr; 3],
}

impl ProlongationAnsatz {
    pub fn new(eps: [Sign; 3], psi: [Expr; 3], phi: [Expr; 3]) -> Result<Self, DriftError> {
        for (a, p) in psi.iter().enumerate() {
            if !p.depends_only_on(&[0, 1]) {
                return Err(CheckError::Invalid(format!(
                    "Ψ^{} must depend on r1, r2 only, got {p}",
                    a + 1
                ))
                .into());
            }
        }
        for f in &phi {
            require_fiber("Φ", f)?;
        }
        Ok(ProlongationAnsatz { eps, psi, phi })
    }

    /// `Ψ^α = c_α e^{r1-r2}` with `Φ^α` from the block.
    pub fn h2_solution(cb: &ConstantBlock, l1: &Expr, l2: &Expr) -> Result<Self, DriftError> {
        let f = e12();
        let psi = std::array::from_fn(|a| Expr::constant(cb.c[a]) * &f);
        let phi = std::array::from_fn(|a| cb.phi(a, l1, l2));
        ProlongationAnsatz::new(cb.eps, psi, phi)
    }

    /// `Ψ^α = c_α (r1 + r2) e^{r1-r2}` with `Φ^α` halved.
    pub fn h3_solution(cb: &ConstantBlock, l1: &Expr, l2: &Expr) -> Result<Self, DriftError> {
        let f = e12();
        let s = Expr::var(0) + Expr::var(1);
        let psi = std::array::from_fn(|a| Expr::constant(cb.c[a]) * &s * &f);
        let phi = std::array::from_fn(|a| Expr::rational(1, 2) * cb.phi(a, l1, l2));
        ProlongationAnsatz::new(cb.eps, psi, phi)
    }

    /// The affinors this ansatz produces.
    pub fn affinors(&self) -> Vec<AffinorField> {
        let e = e21();
        (0..3)
            .map(|a| {
                let psi = &self.psi[a];
                AffinorField::diagonal(
                    self.eps[a],
                    vec![
                        &e * psi.derivative(0),
                        -(&e * psi.derivative(1)),
                        &e * (&self.phi[a] + psi),
                    ],
                )
            })
            .collect()
    }

    /// Errors with the first `Ψ` that fails the Klein–Gordon equation.
    pub fn verify_klein_gordon(&self, plan: &SamplePlan) -> Result<(), DriftError> {
        for (a, psi) in self.psi.iter().enumerate() {
            let report = kg_residual(psi, plan)?;
            if !report.passed {
                return Err(DriftError::NotKleinGordon {
                    component: a + 1,
                    residual: report.max_residual(),
                    report: Box::new(report),
                });
            }
        }
        Ok(())
    }
}

/// The algebraic equations on `(Ψ, Φ)`. The `*3` variants carry the
/// right-hand sides of the third operator.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintEquation {
    /// `Σ ε (Φ+Ψ) Ψ_{r1} = -e^{r1-r2}`
    Eq4a,
    /// `Σ ε (Φ+Ψ) Ψ_{r2} = e^{r1-r2}`
    Eq4b,
    /// `Σ ε Ψ_{r1} Ψ_{r2} = 0`
    Eq4c,
    /// `Σ ε (Φ + Ψ/2) Ψ = Ω - e^{r1-r2}`
    Eq5 { omega: Expr },
    /// `Σ ε Ψ² = C - 2 e^{r1-r2}`
    Eq7 { c: f64 },
    /// `Σ ε (Φ+Ψ) Ψ_{r1} = (r1+r2+1) e^{r1-r2} / 2`
    Eq4a3,
    /// `Σ ε (Φ+Ψ) Ψ_{r2} = -(r1+r2-1) e^{r1-r2} / 2`
    Eq4b3,
    /// `Σ ε (Φ + Ψ/2) Ψ = Ω - (r1+r2) e^{r1-r2} / 2`
    Eq5h3 { omega: Expr },
}

impl ConstraintEquation {
    pub fn tag(&self) -> &'static str {
        match self {
            ConstraintEquation::Eq4a => "eq4a",
            ConstraintEquation::Eq4b => "eq4b",
            ConstraintEquation::Eq4c => "eq4c",
            ConstraintEquation::Eq5 { .. } => "eq5",
            ConstraintEquation::Eq7 { .. } => "eq7",
            ConstraintEquation::Eq4a3 => "eq4a3",
            ConstraintEquation::Eq4b3 => "eq4b3",
            ConstraintEquation::Eq5h3 { .. } => "eq5h3",
        }
    }

    /// The equations checked for a solution of the second operator.
    pub fn h2_set() -> Vec<ConstraintEquation> {
        vec![
            ConstraintEquation::Eq4a,
            ConstraintEquation::Eq4b,
            ConstraintEquation::Eq4c,
            ConstraintEquation::Eq5 {
                omega: Expr::zero(),
            },
        ]
    }

    fn describe(&self) -> String {
        match self {
            ConstraintEquation::Eq4a => "sum e (Phi+Psi) Psi_r1 = -exp(r1-r2)".into(),
            ConstraintEquation::Eq4b => "sum e (Phi+Psi) Psi_r2 = exp(r1-r2)".into(),
            ConstraintEquation::Eq4c => "sum e Psi_r1 Psi_r2 = 0".into(),
            ConstraintEquation::Eq5 { omega } => {
                format!("sum e (Phi+Psi/2) Psi = {omega} - exp(r1-r2)")
            }
            ConstraintEquation::Eq7 { c } => format!("sum e Psi^2 = {c} - 2 exp(r1-r2)"),
            ConstraintEquation::Eq4a3 => "sum e (Phi+Psi) Psi_r1 = (r1+r2+1) exp(r1-r2)/2".into(),
            ConstraintEquation::Eq4b3 => "sum e (Phi+Psi) Psi_r2 = -(r1+r2-1) exp(r1-r2)/2".into(),
            ConstraintEquation::Eq5h3 { omega } => {
                format!("sum e (Phi+Psi/2) Psi = {omega} - (r1+r2) exp(r1-r2)/2")
            }
        }
    }
}

impl fmt::Display for ConstraintEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintEquation::Eq5 { omega } | ConstraintEquation::Eq5h3 { omega } => {
                write!(f, "{}({omega})", self.tag())
            }
            ConstraintEquation::Eq7 { c } => write!(f, "eq7({c})"),
            other => f.write_str(other.tag()),
        }
    }
}

impl FromStr for ConstraintEquation {
    type Err = DriftError;

    /// `eq4a`, `eq4b`, `eq4c`, `eq4a3`, `eq4b3`, `eq5(<Ω>)`, `eq5h3(<Ω>)`,
    /// `eq7(<C>)`.
    fn from_str(s: &str) -> Result<Self, DriftError> {
        let s = s.trim();
        let unknown = || DriftError::UnknownEquation(s.to_string());
        let (head, arg) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(unknown()),
            None => (s, None),
        };
        let omega = |a: Option<&str>| -> Result<Expr, DriftError> {
            let e = parse_expr(a.ok_or_else(unknown)?, 3).map_err(CheckError::from)?;
            require_fiber("Ω", &e)?;
            Ok(e)
        };
        Ok(match (head.to_ascii_lowercase().as_str(), arg) {
            ("eq4a", None) => ConstraintEquation::Eq4a,
            ("eq4b", None) => ConstraintEquation::Eq4b,
            ("eq4c", None) => ConstraintEquation::Eq4c,
            ("eq4a3", None) => ConstraintEquation::Eq4a3,
            ("eq4b3", None) => ConstraintEquation::Eq4b3,
            ("eq5", a) => ConstraintEquation::Eq5 { omega: omega(a)? },
            ("eq5h3", a) => ConstraintEquation::Eq5h3 { omega: omega(a)? },
            ("eq7", Some(a)) => {
                let e = parse_expr(a, 3).map_err(CheckError::from)?;
                let c = e.as_const().ok_or_else(unknown)?;
                ConstraintEquation::Eq7 {
                    c: *c.numer() as f64 / *c.denom() as f64,
                }
            }
            _ => return Err(unknown()),
        })
    }
}

/// Terms of `Σ_α ε_α T_α` and of the right-hand side at one point.
fn terms(
    a: &ProlongationAnsatz,
    which: &ConstraintEquation,
    p: &Point,
) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    let x = p.coords();
    let f = (x[0] - x[1]).exp();
    let s = x[0] + x[1];
    let mut lhs = Vec::with_capacity(3);
    for al in 0..3 {
        let eps = a.eps[al].value();
        let j = a.psi[al].jet(x, 1)?;
        let (psi, p1, p2) = (j.value(), j.d(0), j.d(1));
        let phi = a.phi[al].eval(x)?;
        lhs.push(
            eps * match which {
                ConstraintEquation::Eq4a | ConstraintEquation::Eq4a3 => (phi + psi) * p1,
                ConstraintEquation::Eq4b | ConstraintEquation::Eq4b3 => (phi + psi) * p2,
                ConstraintEquation::Eq4c => p1 * p2,
                ConstraintEquation::Eq5 { .. } | ConstraintEquation::Eq5h3 { .. } => {
                    (phi + 0.5 * psi) * psi
                }
                ConstraintEquation::Eq7 { .. } => psi * psi,
            },
        );
    }
    let rhs = match which {
        ConstraintEquation::Eq4a => vec![-f],
        ConstraintEquation::Eq4b => vec![f],
        ConstraintEquation::Eq4c => vec![],
        ConstraintEquation::Eq5 { omega } => vec![omega.eval(x)?, -f],
        ConstraintEquation::Eq7 { c } => vec![*c, -2.0 * f],
        ConstraintEquation::Eq4a3 => vec![0.5 * (s + 1.0) * f],
        ConstraintEquation::Eq4b3 => vec![-0.5 * (s - 1.0) * f],
        ConstraintEquation::Eq5h3 { omega } => vec![omega.eval(x)?, -0.5 * s * f],
    };
    Ok((lhs, rhs))
}

/// Residual of one constraint equation over the plan. Every `Ψ` must first
/// pass the Klein–Gordon check on the same plan.
pub fn constraint_residuals(
    a: &ProlongationAnsatz,
    which: &ConstraintEquation,
    plan: &SamplePlan,
) -> Result<CheckReport, DriftError> {
    plan.validate().map_err(CheckError::from)?;
    plan.require_dim(3).map_err(CheckError::from)?;
    a.verify_klein_gordon(plan)?;
    let run = run_plan(plan, |p| {
        let (lhs, rhs) = terms(a, which, p)?;
        let diff = lhs.iter().sum::<f64>() - rhs.iter().sum::<f64>();
        Ok(normalized(
            diff,
            term_scale(lhs.iter().chain(&rhs).copied()),
            plan.abs_floor,
        ))
    })
    .map_err(CheckError::from)?;
    let mut r = Residual::new(which.tag(), which.describe(), plan.rel_tol);
    for s in &run.samples {
        r.observe(s.value, &s.point);
    }
    let mut report = CheckReport::new(format!("constraint_{}", which.tag()), plan);
    report.push(r.finish());
    Ok(report)
}
