//! The JSON workbench spec: operators, systems and currents as expression
//! strings, plus the checks to run and how to sample.

use hydroham::exprkit::{
    parse_expr_with_names, Expr, SamplePlan, DEFAULT_COUNT, DEFAULT_REL_TOL, DEFAULT_SEED,
};
use hydroham::geomtensor::{AffinorField, ConnectionField, MetricField, Sign};
use hydroham::hamcheck::{LocalOperator, NonlocalOperator};
use hydroham::hydrosys::{ConservedCurrent, HydroSystem};
use serde::{Deserialize, Serialize};

use crate::Invalid;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkbenchSpec {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variable_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<ExprText>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<Vec<ExprText>>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub affinor_tails: Vec<TailSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<Vec<Vec<ExprText>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub currents: Vec<CurrentSpec>,
    #[serde(default)]
    pub checks: Vec<CheckId>,
    #[serde(default)]
    pub sample_plan: PlanSpec,
}

/// An expression string; bare JSON numbers are accepted too.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExprText {
    Number(f64),
    Text(String),
}

impl ExprText {
    fn text(&self) -> String {
        match self {
            ExprText::Number(x) => format!("{x:?}"),
            ExprText::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub epsilon: i64,
    pub matrix: Vec<Vec<ExprText>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentSpec {
    pub rho: ExprText,
    pub sigma: ExprText,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    SkewAdjoint,
    LocalHamiltonian,
    Contravariant,
    Ferapontov,
    ConservedCurrents,
}

/// Command-line overrides of the sample plan.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlanOverrides {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

impl PlanOverrides {
    pub fn apply(&self, mut plan: SamplePlan) -> SamplePlan {
        if let Some(n) = self.samples {
            plan = plan.with_count(n);
        }
        if let Some(s) = self.seed {
            plan = plan.with_seed(s);
        }
        if let Some(t) = self.tol {
            plan = plan.with_tolerance(t);
        }
        plan
    }
}

/// A validated spec with every expression parsed.
pub struct Workbench {
    pub operator: Option<LocalOperator>,
    pub tails: Vec<AffinorField>,
    pub system: Option<HydroSystem>,
    pub currents: Vec<ConservedCurrent>,
    pub plan: SamplePlan,
    pub checks: Vec<CheckId>,
}

impl WorkbenchSpec {
    pub fn from_json(text: &str) -> Result<Self, Invalid> {
        serde_json::from_str(text).map_err(|e| Invalid(format!("spec does not parse: {e}")))
    }

    /// Parses and validates everything, and fills the sample plan in with
    /// the values actually used so that the echo reproduces the run.
    pub fn resolve(&mut self, overrides: PlanOverrides) -> Result<Workbench, Invalid> {
        let n = self.dimension;
        if n == 0 {
            return Err(Invalid("dimension must be at least 1".into()));
        }
        if !self.variable_names.is_empty() && self.variable_names.len() != n {
            return Err(Invalid(format!(
                "{} variable names for dimension {n}",
                self.variable_names.len()
            )));
        }
        let names = self.variable_names.clone();
        let parse = |what: &str, t: &ExprText| -> Result<Expr, Invalid> {
            parse_expr_with_names(&t.text(), n, &names).map_err(|e| Invalid(format!("{what}: {e}")))
        };
        let square = |what: &str, m: &[Vec<ExprText>]| -> Result<Vec<Vec<Expr>>, Invalid> {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(Invalid(format!("{what} must be {n}x{n}")));
            }
            m.iter()
                .enumerate()
                .map(|(i, r)| {
                    r.iter()
                        .enumerate()
                        .map(|(j, t)| parse(&format!("{what}[{i}][{j}]"), t))
                        .collect()
                })
                .collect()
        };

        let operator = match (&self.metric, &self.b) {
            (None, None) => None,
            (None, Some(_)) => return Err(Invalid("b given without a metric".into())),
            (Some(g), b) => {
                let g =
                    MetricField::new(square("metric", g)?).map_err(|e| Invalid(e.to_string()))?;
                let b = match b {
                    None => ConnectionField::zeros(n),
                    Some(b) => {
                        if b.len() != n {
                            return Err(Invalid(format!("b must be {n}x{n}x{n}")));
                        }
                        let slices = b
                            .iter()
                            .enumerate()
                            .map(|(i, m)| square(&format!("b[{i}]"), m))
                            .collect::<Result<Vec<_>, _>>()?;
                        ConnectionField::new(slices).map_err(|e| Invalid(e.to_string()))?
                    }
                };
                Some(LocalOperator::new(g, b).map_err(|e| Invalid(e.to_string()))?)
            }
        };

        let tails = self
            .affinor_tails
            .iter()
            .enumerate()
            .map(|(a, t)| {
                let sign = Sign::from_i64(t.epsilon).ok_or_else(|| {
                    Invalid(format!(
                        "affinor_tails[{a}].epsilon must be 1 or -1, got {}",
                        t.epsilon
                    ))
                })?;
                AffinorField::new(
                    sign,
                    square(&format!("affinor_tails[{a}].matrix"), &t.matrix)?,
                )
                .map_err(|e| Invalid(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let system = match &self.system {
            None => None,
            Some(m) => {
                Some(HydroSystem::new(square("system", m)?).map_err(|e| Invalid(e.to_string()))?)
            }
        };
        let currents = self
            .currents
            .iter()
            .enumerate()
            .map(|(c, cur)| {
                Ok(ConservedCurrent::new(
                    parse(&format!("currents[{c}].rho"), &cur.rho)?,
                    parse(&format!("currents[{c}].sigma"), &cur.sigma)?,
                ))
            })
            .collect::<Result<Vec<_>, Invalid>>()?;

        let plan = self.plan(
            n,
            operator.as_ref(),
            &tails,
            system.as_ref(),
            &currents,
            overrides,
        )?;
        Ok(Workbench {
            operator,
            tails,
            system,
            currents,
            plan,
            checks: self.checks.clone(),
        })
    }

    fn plan(
        &mut self,
        n: usize,
        op: Option<&LocalOperator>,
        tails: &[AffinorField],
        system: Option<&HydroSystem>,
        currents: &[ConservedCurrent],
        overrides: PlanOverrides,
    ) -> Result<SamplePlan, Invalid> {
        let spec = &mut self.sample_plan;
        let base = match &spec.bounds {
            Some(b) => {
                if b.len() != n {
                    return Err(Invalid(format!(
                        "sample_plan.box has {} intervals for dimension {n}",
                        b.len()
                    )));
                }
                SamplePlan::new(b.iter().map(|[lo, hi]| (*lo, *hi)).collect())
                    .map_err(|e| Invalid(e.to_string()))?
            }
            None => {
                let exprs = op
                    .into_iter()
                    .flat_map(|a| a.exprs())
                    .chain(tails.iter().flat_map(|w| w.exprs()))
                    .chain(system.and_then(|s| s.entries()).into_iter().flatten())
                    .chain(currents.iter().flat_map(|c| [&c.rho, &c.sigma]));
                SamplePlan::auto_box(n, exprs)
            }
        };
        let plan = base
            .with_count(spec.count.unwrap_or(DEFAULT_COUNT))
            .with_seed(spec.seed.unwrap_or(DEFAULT_SEED))
            .with_tolerance(spec.tolerance.unwrap_or(DEFAULT_REL_TOL));
        let plan = overrides.apply(plan);
        plan.validate().map_err(|e| Invalid(e.to_string()))?;
        spec.count = Some(plan.count);
        spec.seed = Some(plan.seed);
        spec.tolerance = Some(plan.rel_tol);
        spec.bounds = Some(plan.bounds.iter().map(|&(lo, hi)| [lo, hi]).collect());
        Ok(plan)
    }
}

impl Workbench {
    pub fn operator(&self, check: CheckId) -> Result<&LocalOperator, Invalid> {
        self.operator
            .as_ref()
            .ok_or_else(|| Invalid(format!("check {check:?} needs a metric")))
    }

    pub fn nonlocal(&self) -> Result<NonlocalOperator, Invalid> {
        let local = self.operator(CheckId::Ferapontov)?.clone();
        NonlocalOperator::new(local, self.tails.clone()).map_err(|e| Invalid(e.to_string()))
    }

    pub fn system(&self, what: &str) -> Result<&HydroSystem, Invalid> {
        self.system
            .as_ref()
            .ok_or_else(|| Invalid(format!("{what} needs a system")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_strings_are_both_expressions() {
        let mut s = WorkbenchSpec::from_json(
            r#"{"dimension": 1, "metric": [[1]], "checks": ["local_hamiltonian"], "sample_plan": {"count": 5}}"#,
        )
        .unwrap();
        let w = s.resolve(PlanOverrides::default()).unwrap();
        assert_eq!(w.plan.count, 5);
        assert_eq!(s.sample_plan.bounds, Some(vec![[-1.0, 1.0]]));
    }

    #[test]
    fn overrides_win_and_are_echoed() {
        let mut s =
            WorkbenchSpec::from_json(r#"{"dimension": 1, "metric": [["u1^2 + 1"]]}"#).unwrap();
        let o = PlanOverrides {
            samples: Some(7),
            seed: Some(3),
            tol: Some(1e-6),
        };
        let w = s.resolve(o).unwrap();
        assert_eq!((w.plan.count, w.plan.seed, w.plan.rel_tol), (7, 3, 1e-6));
        assert_eq!(
            (s.sample_plan.count, s.sample_plan.seed),
            (Some(7), Some(3))
        );
    }

    #[test]
    fn malformed_specs_are_rejected() {
        for text in [
            r#"{"dimension": 2, "metric": [["1", "0"]]}"#,
            r#"{"dimension": 1, "b": [[["0"]]]}"#,
            r#"{"dimension": 1, "metric": [["q"]]}"#,
            r#"{"dimension": 1, "metric": [[1]], "affinor_tails": [{"epsilon": 2, "matrix": [[1]]}]}"#,
            r#"{"dimension": 1, "metric": [[1]], "sample_plan": {"box": [[1, -1]]}}"#,
            r#"{"dimension": 0}"#,
        ] {
            let mut s = WorkbenchSpec::from_json(text).unwrap();
            assert!(s.resolve(PlanOverrides::default()).is_err(), "{text}");
        }
        assert!(WorkbenchSpec::from_json(r#"{"dimension": 1, "metrik": []}"#).is_err());
    }

    #[test]
    fn custom_variable_names_parse() {
        let mut s = WorkbenchSpec::from_json(
            r#"{"dimension": 2, "variable_names": ["rho", "w"], "metric": [["rho^2 + 1", 0], [0, "exp(w)"]]}"#,
        )
        .unwrap();
        assert!(s.resolve(PlanOverrides::default()).is_ok());
    }
}
