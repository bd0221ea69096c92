//! Deterministic sample plans.
//!
//! Sample `i` (and each of its retries) is drawn from ChaCha8 stream `i` of
//! the plan seed, so a point depends only on `(seed, i, attempt)` and never
//! on evaluation order.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::eval::EvalError;
use super::expr::Expr;

pub const DEFAULT_COUNT: usize = 100;
pub const DEFAULT_SEED: u64 = 0x5eed_2024;
pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const DEFAULT_ABS_FLOOR: f64 = 1e-12;
/// Draws per sample index before giving up on it.
pub const DEFAULT_MAX_ATTEMPTS: usize = 16;

/// A point `u = (u^1, .., u^n)` in field space.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x:.6}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("sample count must be at least 1")]
    EmptyPlan,
    #[error("interval {index} is empty or invalid: [{lo}, {hi}]")]
    BadInterval { index: usize, lo: f64, hi: f64 },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("plan dimension {plan} does not match {expected}")]
    DimensionMismatch { plan: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub bounds: Vec<(f64, f64)>,
    pub count: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub max_attempts: usize,
}

impl SamplePlan {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self, PlanError> {
        let plan = SamplePlan {
            bounds,
            count: DEFAULT_COUNT,
            seed: DEFAULT_SEED,
            rel_tol: DEFAULT_REL_TOL,
            abs_floor: DEFAULT_ABS_FLOOR,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// `[-1, 1]` in every direction.
    pub fn unit_box(n: usize) -> Self {
        SamplePlan::new(vec![(-1.0, 1.0); n]).expect("unit box is valid")
    }

    /// `[-1, 1]` per variable, `[0.1, 1]` for variables that occur under
    /// `ln`/`sqrt` or in a divisor of any of `exprs`.
    pub fn auto_box<'a>(n: usize, exprs: impl IntoIterator<Item = &'a Expr>) -> Self {
        let mut bounds = vec![(-1.0, 1.0); n];
        for e in exprs {
            for v in e.guarded_variables() {
                if v < n {
                    bounds[v] = (0.1, 1.0);
                }
            }
        }
        SamplePlan::new(bounds).expect("auto box is valid")
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.count == 0 {
            return Err(PlanError::EmptyPlan);
        }
        for (index, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(PlanError::BadInterval { index, lo, hi });
            }
        }
        if !(self.rel_tol > 0.0) {
            return Err(PlanError::BadTolerance(self.rel_tol));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_floor(mut self, abs_floor: f64) -> Self {
        self.abs_floor = abs_floor;
        self
    }

    pub fn require_dim(&self, n: usize) -> Result<(), PlanError> {
        if self.dim() == n {
            Ok(())
        } else {
            Err(PlanError::DimensionMismatch {
                plan: self.dim(),
                expected: n,
            })
        }
    }

    /// The `attempt`-th draw for sample index `index`.
    pub fn point(&self, index: usize, attempt: usize) -> Point {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let n = self.dim();
        // each f64 consumes two 32-bit words
        rng.set_word_pos((attempt * n * 2) as u128);
        let coords = self
            .bounds
            .iter()
            .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        Point(coords)
    }

    /// First-attempt points `0..count`.
    pub fn points(&self) -> Vec<Point> {
        (0..self.count).map(|i| self.point(i, 0)).collect()
    }
}

/// Why a drawn point was discarded.
#[derive(Debug, Clone, PartialEq)]
pub enum Rejection {
    Domain(EvalError),
    Degenerate { det: f64 },
}

impl From<EvalError> for Rejection {
    fn from(e: EvalError) -> Self {
        Rejection::Domain(e)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("domain too hostile: sample {index} failed {attempts} draws, last: {last}")]
    DomainTooHostile {
        index: usize,
        attempts: usize,
        last: EvalError,
    },
}

#[derive(Debug, Clone)]
pub struct Sample<T> {
    pub index: usize,
    pub point: Point,
    pub value: T,
}

#[derive(Debug, Clone)]
pub struct SampleRun<T> {
    pub samples: Vec<Sample<T>>,
    pub attempts: usize,
    pub degenerate: usize,
    pub domain_rejects: usize,
}

impl<T> SampleRun<T> {
    /// Fraction of all draws rejected as degenerate.
    pub fn degenerate_fraction(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.degenerate as f64 / self.attempts as f64
        }
    }
}

/// Evaluate `f` at every sample index, redrawing rejected points.
///
/// An index whose draws are all rejected as degenerate is dropped; one whose
/// last rejection was a domain violation aborts the run.
pub fn run_plan<T>(
    plan: &SamplePlan,
    mut f: impl FnMut(&Point) -> Result<T, Rejection>,
) -> Result<SampleRun<T>, SampleError> {
    let mut run = SampleRun {
        samples: Vec::with_capacity(plan.count),
        attempts: 0,
        degenerate: 0,
        domain_rejects: 0,
    };
    for index in 0..plan.count {
        let mut last = None;
        for attempt in 0..plan.max_attempts.max(1) {
            let point = plan.point(index, attempt);
            run.attempts += 1;
            match f(&point) {
                Ok(value) => {
                    run.samples.push(Sample {
                        index,
                        point,
                        value,
                    });
                    last = None;
                    break;
                }
                Err(r) => {
                    match &r {
                        Rejection::Degenerate { .. } => run.degenerate += 1,
                        Rejection::Domain(_) => run.domain_rejects += 1,
                    }
                    last = Some(r);
                }
            }
        }
        if let Some(Rejection::Domain(err)) = last {
            return Err(SampleError::DomainTooHostile {
                index,
                attempts: plan.max_attempts.max(1),
                last: err,
            });
        }
    }
    Ok(run)
}
