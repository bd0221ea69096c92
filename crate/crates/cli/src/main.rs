//! Command-line front end: check operators and systems described in a JSON
//! spec, run the built-in presets, and apply reciprocal transformations.
//!
//! Exit codes: 0 when every condition passes, 1 when at least one fails,
//! 2 for invalid or degenerate input.

mod document;
mod presets;
mod spec;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hydroham::hamcheck::{
    check_contravariant, check_ferapontov, check_local_hamiltonian, check_skew_adjoint,
};
use hydroham::hydrosys::{check_conserved_current, reciprocal_transform_system};
use serde_json::json;

use document::{render, Findings, ReportDocument, Style, TOOL};
use presets::{PresetArgs, PresetName};
use spec::{CheckId, PlanOverrides, Workbench, WorkbenchSpec};

/// Input that cannot be checked at all; exit code 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Parser)]
#[command(
    name = "hydroham",
    version,
    about = "Hamiltonian operators of hydrodynamic type: checks and presets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks listed in a workbench spec
    Check {
        spec: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Materialize a built-in object and run its check suite
    Preset {
        #[arg(value_enum)]
        name: PresetName,
        #[command(flatten)]
        params: PresetArgs,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Transform a system by two conserved currents and sample the result
    Reciprocal {
        spec: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Clone, Copy)]
struct PlanArgs {
    /// Number of sample points
    #[arg(long)]
    samples: Option<usize>,
    /// Sampling seed
    #[arg(long)]
    seed: Option<u64>,
    /// Relative tolerance of every residual
    #[arg(long)]
    tol: Option<f64>,
}

impl From<PlanArgs> for PlanOverrides {
    fn from(a: PlanArgs) -> Self {
        PlanOverrides {
            samples: a.samples,
            seed: a.seed,
            tol: a.tol,
        }
    }
}

#[derive(Args, Clone, Copy)]
struct OutArgs {
    /// Print the report document as JSON
    #[arg(long)]
    json: bool,
}

fn load(path: &Path) -> Result<WorkbenchSpec, Invalid> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Invalid(format!("cannot read {}: {e}", path.display())))?;
    WorkbenchSpec::from_json(&text)
}

fn echo(spec: &WorkbenchSpec) -> serde_json::Value {
    serde_json::to_value(spec).expect("spec serializes")
}

fn run_checks(w: &Workbench, f: &mut Findings) -> Result<(), Invalid> {
    if w.checks.is_empty() {
        return Err(Invalid("spec requests no checks".into()));
    }
    let err = |e: hydroham::CheckError| Invalid(e.to_string());
    for &id in &w.checks {
        match id {
            CheckId::SkewAdjoint => f
                .reports
                .push(check_skew_adjoint(w.operator(id)?, &w.plan).map_err(err)?),
            CheckId::LocalHamiltonian => f
                .reports
                .push(check_local_hamiltonian(w.operator(id)?, &w.plan).map_err(err)?),
            CheckId::Contravariant => f
                .reports
                .push(check_contravariant(w.operator(id)?, &w.plan).map_err(err)?),
            CheckId::Ferapontov => f
                .reports
                .push(check_ferapontov(&w.nonlocal()?, &w.plan).map_err(err)?),
            CheckId::ConservedCurrents => {
                let s = w.system("conserved_currents")?;
                if w.currents.is_empty() {
                    return Err(Invalid(
                        "conserved_currents needs at least one current".into(),
                    ));
                }
                for (i, c) in w.currents.iter().enumerate() {
                    let mut r = check_conserved_current(s, c, &w.plan).map_err(err)?;
                    r.name = format!("conserved_current[{i}]");
                    f.reports.push(r);
                }
            }
        }
    }
    Ok(())
}

fn cmd_check(path: &Path, overrides: PlanOverrides) -> Result<Findings, Invalid> {
    let mut spec = load(path)?;
    let w = spec.resolve(overrides)?;
    let mut f = Findings::default();
    run_checks(&w, &mut f)?;
    f.spec = echo(&spec);
    Ok(f)
}

/// Checks both currents, transforms, samples the new velocity on a grid and
/// runs any requested checks on the operator supplied in the spec, which is
/// read as a candidate operator of the transformed system.
fn cmd_reciprocal(path: &Path, overrides: PlanOverrides) -> Result<Findings, Invalid> {
    let mut spec = load(path)?;
    let w = spec.resolve(overrides)?;
    let mut f = Findings::default();
    let s = w.system("reciprocal")?;
    if w.currents.len() != 2 {
        return Err(Invalid(format!(
            "reciprocal needs exactly two currents, got {}",
            w.currents.len()
        )));
    }
    for (i, c) in w.currents.iter().enumerate() {
        let mut r = check_conserved_current(s, c, &w.plan).map_err(|e| Invalid(e.to_string()))?;
        r.name = format!("conserved_current[{i}]");
        f.reports.push(r);
    }
    f.spec = echo(&spec);
    if f.reports.iter().any(|r| !r.passed) {
        f.notes
            .push("a current is not conserved; no transformation performed".into());
        return Ok(f);
    }
    let out = reciprocal_transform_system(s, &w.currents[0], &w.currents[1], &w.plan)
        .map_err(presets::reciprocal)?;
    f.samples = presets::sample_system("transformed", &out.system, &w.plan)?;
    if !w.checks.is_empty() {
        run_checks(&w, &mut f)?;
    }
    Ok(f)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (command, subject, json, result) = match &cli.command {
        Command::Check { spec, plan, out } => (
            "check",
            spec.display().to_string(),
            out.json,
            cmd_check(spec, (*plan).into()),
        ),
        Command::Preset {
            name,
            params,
            plan,
            out,
        } => {
            let subject = clap::ValueEnum::to_possible_value(name)
                .expect("named")
                .get_name()
                .to_string();
            (
                "preset",
                subject,
                out.json,
                presets::run(*name, params, (*plan).into()),
            )
        }
        Command::Reciprocal { spec, plan, out } => (
            "reciprocal",
            spec.display().to_string(),
            out.json,
            cmd_reciprocal(spec, (*plan).into()),
        ),
    };
    match result {
        Ok(findings) => {
            let doc = ReportDocument::new(
                command,
                &subject,
                findings,
                start.elapsed().as_millis() as u64,
            );
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&doc).expect("document serializes")
                );
            } else {
                print!("{}", render(&doc, &Style::detect()));
            }
            ExitCode::from(doc.exit_code())
        }
        Err(Invalid(msg)) => {
            eprintln!("error: {msg}");
            if json {
                let doc = json!({
                    "tool": TOOL,
                    "version": env!("CARGO_PKG_VERSION"),
                    "command": command,
                    "subject": subject,
                    "error": msg,
                });
                println!(
                    "{}",
                    serde_json::to_string_pretty(&doc).expect("error serializes")
                );
            }
            ExitCode::from(2)
        }
    }
}
