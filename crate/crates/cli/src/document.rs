//! The report document and its human-readable rendering.

use std::fmt::Write as _;
use std::io::IsTerminal;

use hydroham::exprkit::Point;
use hydroham::CheckReport;
use serde::{Deserialize, Serialize};

pub const TOOL: &str = "hydroham";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Spec file path or preset name.
    pub subject: String,
    /// The effective input: the spec with its sample plan filled in, or the
    /// preset parameters.
    pub spec: serde_json::Value,
    pub reports: Vec<CheckReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<FieldSample>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub passed: bool,
    pub wall_time_ms: u64,
}

/// A velocity field `u_t = v u_x` evaluated at one point. `speeds` holds the
/// characteristic speeds `λ = -v` when `v` is diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub label: String,
    pub point: Point,
    pub velocity: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speeds: Option<Vec<f64>>,
}

/// What a command produced, before timing and bookkeeping.
#[derive(Debug, Default)]
pub struct Findings {
    pub spec: serde_json::Value,
    pub reports: Vec<CheckReport>,
    pub samples: Vec<FieldSample>,
    pub notes: Vec<String>,
}

impl ReportDocument {
    pub fn new(command: &str, subject: &str, f: Findings, wall_time_ms: u64) -> Self {
        let passed = !f.reports.is_empty() && f.reports.iter().all(|r| r.passed);
        ReportDocument {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            subject: subject.into(),
            spec: f.spec,
            reports: f.reports,
            samples: f.samples,
            notes: f.notes,
            passed,
            wall_time_ms,
        }
    }

    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Three significant digits in scientific notation.
pub fn sci(x: f64) -> String {
    if x == f64::MAX {
        "unbounded".into()
    } else {
        format!("{x:.2e}")
    }
}

pub struct Style {
    color: bool,
}

impl Style {
    /// Colour only on a terminal and only when `NO_COLOR` is unset or empty.
    pub fn detect() -> Self {
        let no_color = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
        Style {
            color: !no_color && std::io::stdout().is_terminal(),
        }
    }

    fn verdict(&self, passed: bool) -> String {
        let (word, code) = if passed {
            ("PASS", "32")
        } else {
            ("FAIL", "31")
        };
        if self.color {
            format!("\x1b[{code}m{word}\x1b[0m")
        } else {
            word.into()
        }
    }
}

pub fn render(doc: &ReportDocument, style: &Style) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {}: {}",
        doc.tool, doc.version, doc.command, doc.subject
    );
    for r in &doc.reports {
        let _ = writeln!(
            out,
            "\n{} [{}]  seed {:#x}, {} points, tol {}",
            r.name,
            style.verdict(r.passed),
            r.plan.seed,
            r.plan.count,
            sci(r.plan.rel_tol)
        );
        let width = r
            .conditions
            .iter()
            .map(|c| c.id.len())
            .max()
            .unwrap_or(0)
            .max(9);
        let _ = writeln!(
            out,
            "  {:<width$}  {:>10}  {:>10}  {:>6}  {:>6}  witness",
            "condition", "residual", "threshold", "points", "status"
        );
        for c in &r.conditions {
            let witness = c
                .witness
                .as_ref()
                .map(|w| w.to_string())
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "  {:<width$}  {:>10}  {:>10}  {:>6}  {:>6}  {witness}",
                c.id,
                sci(c.max_residual),
                sci(c.threshold),
                c.points,
                style.verdict(c.passed),
            );
        }
        for n in &r.notes {
            let _ = writeln!(out, "  note: {n}");
        }
    }
    if !doc.samples.is_empty() {
        let _ = writeln!(
            out,
            "\nvelocity fields (u_t = v u_x; speeds are λ = -v for r_t + λ r_x = 0)"
        );
        for s in &doc.samples {
            let v = match &s.speeds {
                Some(_) => {
                    let d: Vec<String> = (0..s.velocity.len())
                        .map(|i| format!("{:.6}", s.velocity[i][i]))
                        .collect();
                    format!("diag v = ({})", d.join(", "))
                }
                None => {
                    let rows: Vec<String> = s
                        .velocity
                        .iter()
                        .map(|r| {
                            r.iter()
                                .map(|x| format!("{x:.6}"))
                                .collect::<Vec<_>>()
                                .join(", ")
                        })
                        .collect();
                    format!("v = [{}]", rows.join("; "))
                }
            };
            let speeds = s
                .speeds
                .as_ref()
                .map(|l| {
                    format!(
                        "  λ = ({})",
                        l.iter()
                            .map(|x| format!("{x:.6}"))
                            .collect::<Vec<_>>()
                            .join(", ")
                    )
                })
                .unwrap_or_default();
            let _ = writeln!(out, "  {} at {}: {v}{speeds}", s.label, s.point);
        }
    }
    for n in &doc.notes {
        let _ = writeln!(out, "\nnote: {n}");
    }
    let _ = writeln!(
        out,
        "\noverall: {} ({} ms)",
        style.verdict(doc.passed),
        doc.wall_time_ms
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_significant_digits() {
        assert_eq!(sci(1.23456e-10), "1.23e-10");
        assert_eq!(sci(0.0), "0.00e0");
        assert_eq!(sci(f64::MAX), "unbounded");
    }

    #[test]
    fn empty_document_does_not_pass() {
        let d = ReportDocument::new("check", "x", Findings::default(), 0);
        assert!(!d.passed);
        assert_eq!(d.exit_code(), 1);
    }

    #[test]
    fn plain_rendering_has_no_escapes() {
        let d = ReportDocument::new("check", "x", Findings::default(), 0);
        assert!(!render(&d, &Style { color: false }).contains('\x1b'));
    }
}
