use num_rational::Rational64;

use crate::error::CheckError;
use crate::exprkit::Expr;
use crate::geomtensor::{AffinorField, ConnectionField, GeomError, MetricField};

/// `A^{ij} = g^{ij} D_x + b^{ij}_k u^k_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    pub g: MetricField,
    pub b: ConnectionField,
}

impl LocalOperator {
    pub fn new(g: MetricField, b: ConnectionField) -> Result<Self, GeomError> {
        if g.dim() != b.dim() {
            return Err(GeomError::Shape(format!(
                "metric has dimension {}, connection {}",
                g.dim(),
                b.dim()
            )));
        }
        Ok(LocalOperator { g, b })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// The operator on the sub-vector `u^{idx[0]}, u^{idx[1]}, ..`.
    pub fn restrict(&self, idx: &[usize]) -> LocalOperator {
        LocalOperator {
            g: self.g.restrict(idx),
            b: self.b.restrict(idx),
        }
    }

    /// `self + λ other`.
    pub fn pencil(
        &self,
        other: &LocalOperator,
        lambda: Rational64,
    ) -> Result<LocalOperator, CheckError> {
        if self.dim() != other.dim() {
            return Err(CheckError::Dimension(
                "pencil members differ in dimension".into(),
            ));
        }
        let l = Expr::constant(lambda);
        Ok(LocalOperator {
            g: self.g.zip(&other.g, |a, b| {
                Expr::add(a.clone(), Expr::mul(l.clone(), b.clone()))
            }),
            b: self.b.zip(&other.b, |a, b| {
                Expr::add(a.clone(), Expr::mul(l.clone(), b.clone()))
            }),
        })
    }

    pub fn exprs(&self) -> impl Iterator<Item = &Expr> {
        self.g.exprs().chain(self.b.exprs())
    }
}

/// A local operator plus tails `ε_α w^i_{αk} u^k_x D_x^{-1} w^j_{αl} u^l_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalOperator {
    pub local: LocalOperator,
    pub tails: Vec<AffinorField>,
}

impl NonlocalOperator {
    pub fn new(local: LocalOperator, tails: Vec<AffinorField>) -> Result<Self, GeomError> {
        if let Some(w) = tails.iter().find(|w| w.dim() != local.dim()) {
            return Err(GeomError::Shape(format!(
                "affinor has dimension {}, operator {}",
                w.dim(),
                local.dim()
            )));
        }
        Ok(NonlocalOperator { local, tails })
    }

    pub fn dim(&self) -> usize {
        self.local.dim()
    }

    pub fn exprs(&self) -> impl Iterator<Item = &Expr> {
        self.local
            .exprs()
            .chain(self.tails.iter().flat_map(|w| w.exprs()))
    }
}
