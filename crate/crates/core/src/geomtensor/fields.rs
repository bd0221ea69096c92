use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::GeomError;
use crate::exprkit::{EvalError, Expr, Jet, Point};

/// Contravariant metric `g^{ij}(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    n: usize,
    entries: Vec<Expr>,
}

impl MetricField {
    pub fn new(rows: Vec<Vec<Expr>>) -> Result<Self, GeomError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(GeomError::Shape(format!(
                "metric must be square, got {n} rows of lengths {:?}",
                rows.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        Ok(MetricField {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn diagonal(diag: Vec<Expr>) -> Self {
        let n = diag.len();
        let mut entries = vec![Expr::zero(); n * n];
        for (i, d) in diag.into_iter().enumerate() {
            entries[i * n + i] = d;
        }
        MetricField { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<Expr>> {
        self.entries
            .chunks(self.n.max(1))
            .map(<[Expr]>::to_vec)
            .collect()
    }

    pub fn exprs(&self) -> impl Iterator<Item = &Expr> {
        self.entries.iter()
    }

    /// Entries `(i, j)` with `i, j` in `idx`, in that order.
    pub fn restrict(&self, idx: &[usize]) -> MetricField {
        let rows = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| self.get(i, j).clone()).collect())
            .collect();
        MetricField::new(rows).expect("square restriction")
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> MetricField {
        MetricField {
            n: self.n,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn zip(&self, other: &MetricField, f: impl Fn(&Expr, &Expr) -> Expr) -> MetricField {
        assert_eq!(self.n, other.n);
        MetricField {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn eval(&self, p: &Point) -> Result<DMatrix<f64>, EvalError> {
        let vals = self
            .entries
            .iter()
            .map(|e| e.eval(p.coords()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DMatrix::from_row_slice(self.n, self.n, &vals))
    }

    /// Row-major jets of every entry.
    pub fn jets(&self, p: &Point, order: usize) -> Result<Vec<Vec<Jet>>, EvalError> {
        let mut rows = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let row = (0..self.n)
                .map(|j| self.get(i, j).jet(p.coords(), order))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(rows)
    }
}

/// Connection coefficients `b^{ij}_k(u)`, multiplying `u^k_x` in the
/// `(i, j)` entry of the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionField {
    n: usize,
    entries: Vec<Expr>,
}

impl ConnectionField {
    pub fn zeros(n: usize) -> Self {
        ConnectionField {
            n,
            entries: vec![Expr::zero(); n * n * n],
        }
    }

    /// From nested `[i][j][k]` arrays.
    pub fn new(b: Vec<Vec<Vec<Expr>>>) -> Result<Self, GeomError> {
        let n = b.len();
        if b.iter()
            .any(|r| r.len() != n || r.iter().any(|c| c.len() != n))
        {
            return Err(GeomError::Shape(format!("connection must be {n}x{n}x{n}")));
        }
        Ok(ConnectionField {
            n,
            entries: b.into_iter().flatten().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Expr {
        &self.entries[(i * self.n + j) * self.n + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, e: Expr) {
        self.entries[(i * self.n + j) * self.n + k] = e;
    }

    pub fn exprs(&self) -> impl Iterator<Item = &Expr> {
        self.entries.iter()
    }

    pub fn nested(&self) -> Vec<Vec<Vec<Expr>>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| (0..self.n).map(|k| self.get(i, j, k).clone()).collect())
                    .collect()
            })
            .collect()
    }

    pub fn restrict(&self, idx: &[usize]) -> ConnectionField {
        let b = idx
            .iter()
            .map(|&i| {
                idx.iter()
                    .map(|&j| idx.iter().map(|&k| self.get(i, j, k).clone()).collect())
                    .collect()
            })
            .collect();
        ConnectionField::new(b).expect("cubic restriction")
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> ConnectionField {
        ConnectionField {
            n: self.n,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn zip(
        &self,
        other: &ConnectionField,
        f: impl Fn(&Expr, &Expr) -> Expr,
    ) -> ConnectionField {
        assert_eq!(self.n, other.n);
        ConnectionField {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    /// Values `b^{ij}_k(p)` laid out as `[(i, j, k)]`.
    pub fn eval(&self, p: &Point) -> Result<super::Tensor3, EvalError> {
        let data = self
            .entries
            .iter()
            .map(|e| e.eval(p.coords()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(super::Tensor3::from_vec(self.n, data))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Sign {
    pub fn from_i64(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// A signed (1,1)-tensor field `w^i_j(u)`: row index up, column index down.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinorField {
    pub sign: Sign,
    n: usize,
    entries: Vec<Expr>,
}

impl AffinorField {
    pub fn new(sign: Sign, rows: Vec<Vec<Expr>>) -> Result<Self, GeomError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(GeomError::Shape("affinor must be square".into()));
        }
        Ok(AffinorField {
            sign,
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn diagonal(sign: Sign, diag: Vec<Expr>) -> Self {
        let n = diag.len();
        let mut entries = vec![Expr::zero(); n * n];
        for (i, d) in diag.into_iter().enumerate() {
            entries[i * n + i] = d;
        }
        AffinorField { sign, n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.entries[i * self.n + j] = e;
    }

    pub fn rows(&self) -> Vec<Vec<Expr>> {
        self.entries
            .chunks(self.n.max(1))
            .map(<[Expr]>::to_vec)
            .collect()
    }

    pub fn exprs(&self) -> impl Iterator<Item = &Expr> {
        self.entries.iter()
    }

    pub fn eval(&self, p: &Point) -> Result<DMatrix<f64>, EvalError> {
        let vals = self
            .entries
            .iter()
            .map(|e| e.eval(p.coords()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DMatrix::from_row_slice(self.n, self.n, &vals))
    }

    pub fn jets(&self, p: &Point, order: usize) -> Result<Vec<Vec<Jet>>, EvalError> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.get(i, j).jet(p.coords(), order))
                    .collect()
            })
            .collect()
    }
}
