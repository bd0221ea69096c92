//! Per-condition check reports.

use serde::{Deserialize, Serialize};

use crate::exprkit::{Point, SamplePlan};

/// Which plan produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEcho {
    pub seed: u64,
    pub count: usize,
    pub rel_tol: f64,
    pub abs_floor: f64,
}

impl From<&SamplePlan> for PlanEcho {
    fn from(p: &SamplePlan) -> Self {
        PlanEcho {
            seed: p.seed,
            count: p.count,
            rel_tol: p.rel_tol,
            abs_floor: p.abs_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub id: String,
    pub description: String,
    pub max_residual: f64,
    pub threshold: f64,
    /// Point of the largest residual; absent when every residual is zero.
    pub witness: Option<Point>,
    pub passed: bool,
    /// Number of points the condition was evaluated at.
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub conditions: Vec<ConditionRecord>,
    pub passed: bool,
    pub plan: PlanEcho,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, plan: &SamplePlan) -> Self {
        CheckReport {
            name: name.into(),
            conditions: Vec::new(),
            passed: true,
            plan: plan.into(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, record: ConditionRecord) {
        self.passed &= record.passed;
        self.conditions.push(record);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn condition(&self, id: &str) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|c| c.id == id)
    }

    pub fn failed(&self) -> impl Iterator<Item = &ConditionRecord> {
        self.conditions.iter().filter(|c| !c.passed)
    }

    /// Largest residual over all conditions.
    pub fn max_residual(&self) -> f64 {
        self.conditions
            .iter()
            .map(|c| c.max_residual)
            .fold(0.0, f64::max)
    }
}

/// Running max of one condition's residual over sample points.
#[derive(Debug, Clone)]
pub struct Residual {
    id: String,
    description: String,
    threshold: f64,
    max: f64,
    witness: Option<Point>,
    points: usize,
}

impl Residual {
    pub fn new(id: impl Into<String>, description: impl Into<String>, threshold: f64) -> Self {
        Residual {
            id: id.into(),
            description: description.into(),
            threshold,
            max: 0.0,
            witness: None,
            points: 0,
        }
    }

    /// Record `residual` at `p`. Ties keep the earlier point; NaN counts as
    /// an unbounded residual.
    pub fn observe(&mut self, residual: f64, p: &Point) {
        self.points += 1;
        let r = if residual.is_nan() || residual.is_infinite() {
            f64::MAX
        } else {
            residual.abs()
        };
        if r > self.max {
            self.max = r;
            self.witness = Some(p.clone());
        }
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn finish(self) -> ConditionRecord {
        ConditionRecord {
            passed: self.points > 0 && self.max <= self.threshold,
            id: self.id,
            description: self.description,
            max_residual: self.max,
            threshold: self.threshold,
            witness: self.witness,
            points: self.points,
        }
    }
}

/// Scale-free residual: `diff / scale`, or 0 when `diff` is within `floor`.
pub fn normalized(diff: f64, scale: f64, floor: f64) -> f64 {
    let diff = diff.abs();
    if diff <= floor {
        0.0
    } else if scale > 0.0 {
        diff / scale
    } else {
        f64::MAX
    }
}

/// Largest magnitude in `terms`.
pub fn term_scale(terms: impl IntoIterator<Item = f64>) -> f64 {
    terms.into_iter().map(f64::abs).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_tracks_the_first_largest_residual() {
        let mut r = Residual::new("x", "test", 1e-9);
        let a = Point::new(vec![0.0]);
        let b = Point::new(vec![1.0]);
        r.observe(0.0, &a);
        r.observe(0.5, &b);
        r.observe(0.5, &a);
        let rec = r.finish();
        assert_eq!(rec.witness, Some(b));
        assert_eq!(rec.points, 3);
        assert!(!rec.passed);
    }

    #[test]
    fn zero_residual_has_no_witness() {
        let mut r = Residual::new("x", "test", 1e-9);
        r.observe(0.0, &Point::new(vec![2.0]));
        let rec = r.finish();
        assert!(rec.witness.is_none() && rec.passed);
    }

    #[test]
    fn unevaluated_condition_fails() {
        assert!(!Residual::new("x", "test", 1e-9).finish().passed);
    }

    #[test]
    fn nan_residual_fails() {
        let mut r = Residual::new("x", "test", 1e-9);
        r.observe(f64::NAN, &Point::new(vec![2.0]));
        assert_eq!(r.finish().max_residual, f64::MAX);
    }

    #[test]
    fn verdict_is_conjunction() {
        let plan = SamplePlan::unit_box(1);
        let mut rep = CheckReport::new("r", &plan);
        let mut good = Residual::new("a", "", 1.0);
        good.observe(0.5, &Point::new(vec![0.0]));
        rep.push(good.finish());
        assert!(rep.passed);
        let mut bad = Residual::new("b", "", 1e-9);
        bad.observe(1.0, &Point::new(vec![0.0]));
        rep.push(bad.finish());
        assert!(!rep.passed);
        assert_eq!(rep.failed().count(), 1);
    }
}
