//! Named drift-flux objects and the suite each one is checked with.

use std::str::FromStr;

use clap::{Args, ValueEnum};
use hydroham::driftflux::{
    build_h1_theta, build_h2_hat, build_h3_hat, build_nutku, build_remark_operators,
    build_system_s, build_system_s0, build_system_s_tilde, conservative_plan, constraint_residuals,
    default_constant_block, default_lambdas, default_theta, kg_characteristic_j, kg_family_u,
    kg_family_u_printed, kg_family_v, kg_residual, mutation_catalog, preset_plan, riemann_map,
    riemann_plan, ConstantBlock, ConstraintEquation, DriftError, ProlongationAnsatz, RemarkVariant,
};
use hydroham::exprkit::{expr_equal_numeric, parse_expr, Expr, Point, SamplePlan};
use hydroham::hamcheck::{
    check_ferapontov, check_local_hamiltonian, check_pencil_compatibility, LocalOperator,
};
use hydroham::hydrosys::{
    check_change_of_variables, check_conserved_current, reciprocal_transform_system,
    ConservedCurrent, HydroSystem, ReciprocalError,
};
use hydroham::report::Residual;
use hydroham::{CheckError, CheckReport};
use num_rational::Rational64;
use serde_json::json;

use crate::document::{FieldSample, Findings};
use crate::spec::PlanOverrides;
use crate::Invalid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetName {
    /// Diagonal system in Riemann invariants
    S,
    /// Conservative system in (ρ1, ρ2, u)
    STilde,
    /// Two-component subsystem
    S0,
    /// First local operator of the two-component subsystem
    H1,
    /// Second local operator of the two-component subsystem
    H2,
    /// Third local operator of the two-component subsystem
    H3,
    /// Local family with a free function Θ(r3)
    H1Theta,
    /// Nonlocal prolongation of h2
    H2Hat,
    /// Nonlocal prolongation of h3
    H3Hat,
    /// Local operators of the reciprocally transformed system
    RemarkOps,
    /// Klein–Gordon solution families u_k, v_k
    KgFamily,
    /// Algebraic constraints on the affinor ansatz
    Constraints,
    /// Reciprocal transformation of S with the exponential current
    ReciprocalRemark,
    /// Change to Riemann invariants
    RiemannMap,
    /// Compatible pairs of local operators
    Pencil,
    /// Cataloged negative controls (all fail)
    Mutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ansatz {
    H2,
    H3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Corrected,
    AsPrinted,
}

#[derive(Debug, Clone, Args)]
pub struct PresetArgs {
    /// Θ(r3) for h1-theta, h2-hat, h3-hat and remark-ops
    #[arg(long)]
    pub theta: Option<String>,
    /// Λ1(r3) of the nonlocal families
    #[arg(long)]
    pub lambda1: Option<String>,
    /// Λ2(r3) of the nonlocal families
    #[arg(long)]
    pub lambda2: Option<String>,
    /// Tail constants c as a comma-separated triple, e.g. 3,4,5
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// Row b_1 of the tail constant block, as a triple
    #[arg(long, allow_hyphen_values = true)]
    pub b1: Option<String>,
    /// Row b_2 of the tail constant block, as a triple
    #[arg(long, allow_hyphen_values = true)]
    pub b2: Option<String>,
    /// Row b_3 of the tail constant block, as a triple
    #[arg(long, allow_hyphen_values = true)]
    pub b3: Option<String>,
    /// Rational index of the Klein–Gordon families
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<String>,
    /// Reading of the first transformed operator
    #[arg(long, value_enum, default_value = "corrected")]
    pub variant: Variant,
    /// Which ansatz the constraints preset uses
    #[arg(long, value_enum, default_value = "h2")]
    pub ansatz: Ansatz,
    /// Constraint equation tags such as eq4a or eq5(0); repeatable
    #[arg(long = "equation")]
    pub equations: Vec<String>,
    /// Mutation name; all cataloged mutations when omitted
    #[arg(long)]
    pub mutation: Option<String>,
    /// Pencil parameters
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "-2,-1,0.5,1,3"
    )]
    pub lambdas: Vec<f64>,
}

fn fiber(what: &str, text: &str) -> Result<Expr, Invalid> {
    parse_expr(text, 3).map_err(|e| Invalid(format!("--{what}: {e}")))
}

fn rational(what: &str, text: &str) -> Result<Rational64, Invalid> {
    parse_expr(text.trim(), 1)
        .ok()
        .and_then(|e| e.as_const())
        .ok_or_else(|| Invalid(format!("--{what}: `{text}` is not a rational number")))
}

fn triple(what: &str, text: &str) -> Result<[Rational64; 3], Invalid> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Invalid(format!(
            "--{what} needs three comma-separated numbers, got `{text}`"
        )));
    }
    Ok([
        rational(what, parts[0])?,
        rational(what, parts[1])?,
        rational(what, parts[2])?,
    ])
}

fn show(q: &[Rational64; 3]) -> String {
    q.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn drift(e: DriftError) -> Invalid {
    Invalid(e.to_string())
}

fn check(e: CheckError) -> Invalid {
    Invalid(e.to_string())
}

fn named(mut r: CheckReport, name: impl Into<String>) -> CheckReport {
    r.name = name.into();
    r
}

/// `e^{r1-r2}`.
fn exp12() -> Expr {
    parse_expr("exp(r1 - r2)", 3).expect("literal")
}

/// The two currents of the reciprocal transformation: `dt̃ = dt` and
/// `dx̃ = e^{r1-r2}(dx - (r1+r2) dt)`.
pub fn remark_currents() -> (ConservedCurrent, ConservedCurrent) {
    let f = exp12();
    let sigma = parse_expr("(r1 + r2)*exp(r1 - r2)", 3).expect("literal");
    (
        ConservedCurrent::new(Expr::zero(), Expr::int(-1)),
        ConservedCurrent::new(f, sigma),
    )
}

/// Two points per direction at the quarter marks of the box.
pub fn grid(plan: &SamplePlan) -> Vec<Point> {
    let mut pts = vec![Vec::new()];
    for &(lo, hi) in &plan.bounds {
        pts = pts
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                [0.25, 0.75].map(|t| {
                    let mut q = p.clone();
                    q.push(lo + t * (hi - lo));
                    q
                })
            })
            .collect();
    }
    pts.into_iter().map(Point::new).collect()
}

pub fn sample_system(
    label: &str,
    s: &HydroSystem,
    plan: &SamplePlan,
) -> Result<Vec<FieldSample>, Invalid> {
    grid(plan)
        .into_iter()
        .map(|p| {
            let v = s
                .eval(&p)
                .map_err(|e| Invalid(format!("{label} at {p}: {e}")))?;
            let speeds = s
                .speeds(&p)
                .map_err(|e| Invalid(format!("{label} at {p}: {e}")))?;
            Ok(FieldSample {
                label: label.into(),
                velocity: (0..v.nrows())
                    .map(|i| v.row(i).iter().copied().collect())
                    .collect(),
                speeds,
                point: p,
            })
        })
        .collect()
}

fn local_suite(
    ops: &[(String, LocalOperator)],
    plan: &SamplePlan,
) -> Result<Vec<CheckReport>, Invalid> {
    ops.iter()
        .map(|(name, a)| {
            Ok(named(
                check_local_hamiltonian(a, plan).map_err(check)?,
                name.clone(),
            ))
        })
        .collect()
}

struct Context<'a> {
    args: &'a PresetArgs,
    overrides: PlanOverrides,
}

impl Context<'_> {
    fn plan(&self, base: SamplePlan) -> SamplePlan {
        self.overrides.apply(base)
    }

    fn theta(&self, default: &str) -> Result<(String, Expr), Invalid> {
        let text = self
            .args
            .theta
            .clone()
            .unwrap_or_else(|| default.to_string());
        let e = fiber("theta", &text)?;
        Ok((text, e))
    }

    fn lambdas(&self) -> Result<(Expr, Expr), Invalid> {
        let (d1, d2) = default_lambdas();
        let l1 = self
            .args
            .lambda1
            .as_deref()
            .map(|t| fiber("lambda1", t))
            .transpose()?
            .unwrap_or(d1);
        let l2 = self
            .args
            .lambda2
            .as_deref()
            .map(|t| fiber("lambda2", t))
            .transpose()?
            .unwrap_or(d2);
        Ok((l1, l2))
    }

    /// The default block with any rows given on the command line replaced,
    /// validated against the tail constraints.
    fn block(&self) -> Result<ConstantBlock, Invalid> {
        let mut cb = default_constant_block();
        for (flag, value, slot) in [
            ("c", &self.args.c, &mut cb.c),
            ("b1", &self.args.b1, &mut cb.b1),
            ("b2", &self.args.b2, &mut cb.b2),
            ("b3", &self.args.b3, &mut cb.b3),
        ] {
            if let Some(text) = value {
                *slot = triple(flag, text)?;
            }
        }
        cb.validate().map_err(drift)?;
        Ok(cb)
    }

    fn nonlocal_echo(
        &self,
        theta: &str,
        l1: &Expr,
        l2: &Expr,
        cb: &ConstantBlock,
    ) -> serde_json::Value {
        json!({
            "theta": theta,
            "lambda1": l1.to_string(),
            "lambda2": l2.to_string(),
            "c": show(&cb.c),
            "b1": show(&cb.b1),
            "b2": show(&cb.b2),
            "b3": show(&cb.b3),
        })
    }
}

pub fn run(
    name: PresetName,
    args: &PresetArgs,
    overrides: PlanOverrides,
) -> Result<Findings, Invalid> {
    let cx = Context { args, overrides };
    let mut f = Findings::default();
    match name {
        PresetName::S => {
            let s = build_system_s();
            let plan = cx.plan(riemann_plan());
            let (c1, c2) = remark_currents();
            for (i, c) in [c1, c2].iter().enumerate() {
                let r = check_conserved_current(&s, c, &plan).map_err(check)?;
                f.reports.push(named(r, format!("conserved_current[{i}]")));
            }
            f.samples = sample_system("S", &s, &plan)?;
        }
        PresetName::STilde => {
            let plan = cx.plan(conservative_plan());
            let r = check_change_of_variables(
                &build_system_s_tilde(),
                &build_system_s(),
                &riemann_map(),
                &plan,
            )
            .map_err(check)?;
            f.reports.push(named(r, "diagonalization"));
            f.samples = sample_system("S-tilde", &build_system_s_tilde(), &plan)?;
        }
        PresetName::S0 => {
            let s = build_system_s0();
            let plan = cx.plan(preset_plan(2));
            let c = ConservedCurrent::new(
                parse_expr("exp(r1 - r2)", 2).expect("literal"),
                parse_expr("(r1 + r2)*exp(r1 - r2)", 2).expect("literal"),
            );
            f.reports.push(named(
                check_conserved_current(&s, &c, &plan).map_err(check)?,
                "conserved_current",
            ));
            f.samples = sample_system("S0", &s, &plan)?;
        }
        PresetName::H1 | PresetName::H2 | PresetName::H3 => {
            let k = match name {
                PresetName::H1 => 1,
                PresetName::H2 => 2,
                _ => 3,
            };
            let ops = [(format!("H{k}"), build_nutku(k).map_err(drift)?)];
            f.reports = local_suite(&ops, &cx.plan(preset_plan(2)))?;
        }
        PresetName::H1Theta => {
            let (text, theta) = cx.theta(&default_theta().to_string())?;
            let ops = [(
                format!("H1_theta[{text}]"),
                build_h1_theta(&theta).map_err(drift)?,
            )];
            f.reports = local_suite(&ops, &cx.plan(preset_plan(3)))?;
            f.spec = json!({ "theta": text });
        }
        PresetName::H2Hat | PresetName::H3Hat => {
            let (text, theta) = cx.theta(&default_theta().to_string())?;
            let (l1, l2) = cx.lambdas()?;
            let cb = cx.block()?;
            let (label, op) = if name == PresetName::H2Hat {
                ("H2_hat", build_h2_hat(&theta, &l1, &l2, &cb))
            } else {
                ("H3_hat", build_h3_hat(&theta, &l1, &l2, &cb))
            };
            let op = op.map_err(drift)?;
            let r = check_ferapontov(&op, &cx.plan(riemann_plan())).map_err(check)?;
            f.reports.push(named(r, label));
            f.spec = cx.nonlocal_echo(&text, &l1, &l2, &cb);
        }
        PresetName::RemarkOps => {
            let (text, theta) = cx.theta("1")?;
            let variant = match args.variant {
                Variant::Corrected => RemarkVariant::Corrected,
                Variant::AsPrinted => RemarkVariant::AsPrinted,
            };
            let ops = build_remark_operators(&theta, variant).map_err(drift)?;
            let named_ops: Vec<_> = ops
                .into_iter()
                .enumerate()
                .map(|(i, a)| (format!("transformed H{}[{text}]", i + 1), a))
                .collect();
            f.reports = local_suite(&named_ops, &cx.plan(riemann_plan()))?;
            f.spec = json!({ "theta": text, "variant": variant });
        }
        PresetName::KgFamily => {
            let k = rational("k", args.k.as_deref().unwrap_or("1"))?;
            let plan = cx.plan(riemann_plan());
            let u = kg_family_u(k).map_err(drift)?;
            let v = kg_family_v(k).map_err(drift)?;
            f.reports.push(named(
                kg_residual(&u, &plan).map_err(check)?,
                format!("klein_gordon u_{k} = {u}"),
            ));
            f.reports.push(named(
                kg_residual(&v, &plan).map_err(check)?,
                format!("klein_gordon v_{k}"),
            ));
            let lhs = kg_characteristic_j(&u) * Expr::constant(Rational64::from_integer(1) - k * 2);
            let r = expr_equal_numeric(&lhs, &v, &plan).map_err(check)?;
            f.reports.push(named(r, "(1-2k) J[u_k] = v_k"));
            let printed = kg_family_u_printed(k).map_err(drift)?;
            let r = kg_residual(&printed, &plan).map_err(check)?;
            f.notes.push(format!(
                "displayed exponent {printed}: Klein-Gordon residual {}",
                crate::document::sci(r.max_residual())
            ));
            f.spec = json!({ "k": k.to_string() });
        }
        PresetName::Constraints => {
            let (l1, l2) = cx.lambdas()?;
            let cb = cx.block()?;
            let ansatz = match args.ansatz {
                Ansatz::H2 => ProlongationAnsatz::h2_solution(&cb, &l1, &l2),
                Ansatz::H3 => ProlongationAnsatz::h3_solution(&cb, &l1, &l2),
            }
            .map_err(drift)?;
            let equations: Vec<ConstraintEquation> = if args.equations.is_empty() {
                match args.ansatz {
                    Ansatz::H2 => ConstraintEquation::h2_set(),
                    Ansatz::H3 => vec![ConstraintEquation::Eq5h3 {
                        omega: Expr::zero(),
                    }],
                }
            } else {
                args.equations
                    .iter()
                    .map(|t| ConstraintEquation::from_str(t).map_err(drift))
                    .collect::<Result<_, _>>()?
            };
            let plan = cx.plan(riemann_plan());
            for eq in &equations {
                match constraint_residuals(&ansatz, eq, &plan) {
                    Ok(r) => f.reports.push(r),
                    Err(DriftError::NotKleinGordon { report, .. }) => f.reports.push(*report),
                    Err(e) => return Err(drift(e)),
                }
            }
            let mut echo = cx.nonlocal_echo("", &l1, &l2, &cb);
            echo["theta"] = serde_json::Value::Null;
            echo["ansatz"] = json!(match args.ansatz {
                Ansatz::H2 => "h2",
                Ansatz::H3 => "h3",
            });
            echo["equations"] = json!(equations.iter().map(|e| e.to_string()).collect::<Vec<_>>());
            f.spec = echo;
        }
        PresetName::ReciprocalRemark => {
            let plan = cx.plan(riemann_plan());
            let (c1, c2) = remark_currents();
            let out = reciprocal_transform_system(&build_system_s(), &c1, &c2, &plan)
                .map_err(reciprocal)?;
            for (i, r) in out.checks.into_iter().enumerate() {
                f.reports.push(named(r, format!("conserved_current[{i}]")));
            }
            f.reports.push(expected_velocity(&out.system, &plan)?);
            f.samples = sample_system("transformed S", &out.system, &plan)?;
        }
        PresetName::RiemannMap => {
            let m = riemann_map();
            let inverse = m.inverted().expect("map ships its inverse");
            let cplan = cx.plan(conservative_plan());
            let rplan = cx.plan(riemann_plan());
            let fwd =
                check_change_of_variables(&build_system_s_tilde(), &build_system_s(), &m, &cplan)
                    .map_err(check)?;
            let back = check_change_of_variables(
                &build_system_s(),
                &build_system_s_tilde(),
                &inverse,
                &rplan,
            )
            .map_err(check)?;
            f.reports.push(named(fwd, "diagonalization"));
            f.reports.push(named(back, "inverse diagonalization"));
            f.reports.push(round_trip(&m, &cplan)?);
        }
        PresetName::Pencil => {
            let [h1, h2, h3] = [1, 2, 3].map(|k| build_nutku(k).expect("static operator"));
            let ta = build_h1_theta(&Expr::one()).map_err(drift)?;
            let tb = build_h1_theta(&fiber("theta", "r3")?).map_err(drift)?;
            for (label, a, b) in [
                ("pencil (H1, H2)", &h1, &h2),
                ("pencil (H1, H3)", &h1, &h3),
                ("pencil (H2, H3)", &h2, &h3),
                ("pencil (H1_theta[1], H1_theta[r3])", &ta, &tb),
            ] {
                let r =
                    check_pencil_compatibility(a, b, &args.lambdas, &cx.plan(preset_plan(a.dim())))
                        .map_err(check)?;
                f.reports.push(named(r, label));
            }
            f.spec = json!({ "lambdas": args.lambdas });
        }
        PresetName::Mutation => {
            let catalog = mutation_catalog();
            let chosen: Vec<_> = match &args.mutation {
                None => catalog.iter().collect(),
                Some(m) => {
                    let hit: Vec<_> = catalog.iter().filter(|x| x.name == m.as_str()).collect();
                    if hit.is_empty() {
                        let names: Vec<_> = catalog.iter().map(|x| x.name).collect();
                        return Err(Invalid(format!(
                            "unknown mutation `{m}`; known: {}",
                            names.join(", ")
                        )));
                    }
                    hit
                }
            };
            for m in chosen {
                f.reports.push(m.run(&cx.plan(m.plan())).map_err(check)?);
                f.notes.push(format!("{}: {}", m.name, m.description));
            }
            f.spec = json!({ "mutation": args.mutation });
        }
    }
    Ok(f)
}

pub fn reciprocal(e: ReciprocalError) -> Invalid {
    Invalid(e.to_string())
}

/// Transformed velocity against `diag(-e^{r1-r2}, e^{r1-r2}, 0)`.
fn expected_velocity(s: &HydroSystem, plan: &SamplePlan) -> Result<CheckReport, Invalid> {
    let tol = 1e-10;
    let mut res = Residual::new("velocity", "v = diag(-exp(r1-r2), exp(r1-r2), 0)", tol);
    for p in plan.points() {
        let v = s.eval(&p).map_err(|e| Invalid(e.to_string()))?;
        let f = (p[0] - p[1]).exp();
        let want = [-f, f, 0.0];
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let x = if i == j { want[i] } else { 0.0 };
                worst = worst.max((v[(i, j)] - x).abs() / f.max(1.0));
            }
        }
        res.observe(worst, &p);
    }
    let mut r = CheckReport::new("transformed velocity", &plan.clone().with_tolerance(tol));
    r.push(res.finish());
    Ok(r)
}

fn round_trip(
    m: &hydroham::hydrosys::PointChangeMap,
    plan: &SamplePlan,
) -> Result<CheckReport, Invalid> {
    let tol = 1e-10;
    let mut res = Residual::new("round-trip", "inverse(forward(p)) = p", tol);
    for p in plan.points() {
        let q = m.apply(&p).map_err(|e| Invalid(e.to_string()))?;
        let back = m
            .apply_inverse(&q)
            .expect("map ships its inverse")
            .map_err(|e| Invalid(e.to_string()))?;
        let err = p
            .coords()
            .iter()
            .zip(back.coords())
            .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
            .fold(0.0, f64::max);
        res.observe(err, &p);
    }
    let mut r = CheckReport::new("round trip", &plan.clone().with_tolerance(tol));
    r.push(res.finish());
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_two_points_per_axis() {
        let g = grid(&riemann_plan());
        assert_eq!(g.len(), 8);
        assert_eq!(g[0].coords(), &[-0.35, -0.35, 0.325]);
    }

    #[test]
    fn triples_accept_fractions_and_decimals() {
        let t = triple("b3", "0, -0, 1/5").unwrap();
        assert_eq!(t[2], Rational64::new(1, 5));
        assert_eq!(triple("c", "0.5,2,-3").unwrap()[0], Rational64::new(1, 2));
        assert!(triple("c", "1,2").is_err());
        assert!(triple("c", "1,x,2").is_err());
    }
}
