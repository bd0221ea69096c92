//! Truncated multivariate Taylor expansions ("jets").
//!
//! A jet of order `m` in `n` variables stores the Taylor coefficients
//! `c_α = ∂^α f / α!` for every multi-index `|α| ≤ m`, densely, in graded
//! lexicographic order. Arithmetic is exact up to the truncation order, so
//! propagating jets through an expression tree yields all partial
//! derivatives without finite differencing.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

/// Largest order accepted by the public evaluation entry points.
pub const MAX_ORDER: usize = 3;

/// Multi-index bookkeeping shared by all jets of the same shape.
struct Table {
    nvars: usize,
    order: usize,
    indices: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
    /// `(a, b, a+b)` for every pair whose total degree fits the order.
    products: Vec<(usize, usize, usize)>,
    /// `α!` for every index.
    factorials: Vec<f64>,
}

impl Table {
    fn build(nvars: usize, order: usize) -> Table {
        let mut indices = Vec::new();
        for degree in 0..=order {
            let mut current = vec![0u8; nvars];
            graded(&mut indices, &mut current, 0, degree);
        }
        let lookup: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let degree = |a: &[u8]| a.iter().map(|&x| x as usize).sum::<usize>();
        let mut products = Vec::new();
        for (ia, a) in indices.iter().enumerate() {
            for (ib, b) in indices.iter().enumerate() {
                if degree(a) + degree(b) <= order {
                    let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                    products.push((ia, ib, lookup[&sum]));
                }
            }
        }
        let factorials = indices
            .iter()
            .map(|a| a.iter().map(|&k| factorial(k as usize)).product())
            .collect();
        Table {
            nvars,
            order,
            indices,
            lookup,
            products,
            factorials,
        }
    }

    fn shared(nvars: usize, order: usize) -> Arc<Table> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Table>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet table cache poisoned");
        guard
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(Table::build(nvars, order)))
            .clone()
    }
}

/// All multi-indices of total degree `remaining` over positions `pos..`,
/// pushed in lexicographically descending order.
fn graded(out: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, pos: usize, remaining: usize) {
    if pos + 1 >= current.len() {
        if let Some(last) = current.len().checked_sub(1) {
            current[last] = remaining as u8;
            out.push(current.clone());
            current[last] = 0;
        } else if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k as u8;
        graded(out, current, pos + 1, remaining - k);
    }
    current[pos] = 0;
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// Truncated Taylor expansion of a scalar field at a base point.
#[derive(Clone)]
pub struct Jet {
    table: Arc<Table>,
    base: Arc<[f64]>,
    coeffs: Vec<f64>,
}

impl Jet {
    /// The constant jet `value` at `base`.
    pub fn constant(base: &[f64], order: usize, value: f64) -> Jet {
        Jet::constant_shared(base.into(), order, value)
    }

    pub(crate) fn constant_shared(base: Arc<[f64]>, order: usize, value: f64) -> Jet {
        let table = Table::shared(base.len(), order);
        let mut coeffs = vec![0.0; table.indices.len()];
        coeffs[0] = value;
        Jet {
            table,
            base,
            coeffs,
        }
    }

    /// The coordinate function `u_k` expanded at `base`.
    pub fn variable(base: &[f64], order: usize, k: usize) -> Jet {
        Jet::variable_shared(base.into(), order, k)
    }

    pub(crate) fn variable_shared(base: Arc<[f64]>, order: usize, k: usize) -> Jet {
        let value = base[k];
        let mut jet = Jet::constant_shared(base, order, value);
        if jet.table.order >= 1 {
            jet.coeffs[1 + k] = 1.0;
        }
        jet
    }

    pub fn nvars(&self) -> usize {
        self.table.nvars
    }

    pub fn order(&self) -> usize {
        self.table.order
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw Taylor coefficients in graded-lex order.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Multi-indices matching [`Jet::coefficients`].
    pub fn multi_indices(&self) -> impl Iterator<Item = &[u8]> {
        self.table.indices.iter().map(Vec::as_slice)
    }

    /// Taylor coefficient for the multi-index `alpha`, zero if above the order.
    pub fn coefficient(&self, alpha: &[u8]) -> f64 {
        self.table
            .lookup
            .get(alpha)
            .map_or(0.0, |&i| self.coeffs[i])
    }

    /// Partial derivative `∂^α f` at the base point.
    pub fn partial(&self, alpha: &[u8]) -> f64 {
        self.table
            .lookup
            .get(alpha)
            .map_or(0.0, |&i| self.coeffs[i] * self.table.factorials[i])
    }

    /// Partial derivative with respect to the listed variables, e.g. `&[0, 2]`
    /// for `∂_0 ∂_2`.
    pub fn derivative_along(&self, vars: &[usize]) -> f64 {
        let mut alpha = vec![0u8; self.nvars()];
        for &v in vars {
            alpha[v] += 1;
        }
        self.partial(&alpha)
    }

    /// First partial `∂_k`.
    pub fn d(&self, k: usize) -> f64 {
        self.derivative_along(&[k])
    }

    /// Second partial `∂_j ∂_k`.
    pub fn d2(&self, j: usize, k: usize) -> f64 {
        self.derivative_along(&[j, k])
    }

    /// Jet of `∂_k f`, one order lower.
    pub fn differentiate(&self, k: usize) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let lower = Table::shared(self.nvars(), self.order() - 1);
        let coeffs = lower
            .indices
            .iter()
            .map(|beta| {
                let mut up = beta.clone();
                up[k] += 1;
                (beta[k] as f64 + 1.0) * self.coeffs[self.table.lookup[&up]]
            })
            .collect();
        Jet {
            table: lower,
            base: self.base.clone(),
            coeffs,
        }
    }

    /// Drop every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order());
        let table = Table::shared(self.nvars(), order);
        let coeffs = self.coeffs[..table.indices.len()].to_vec();
        Jet {
            table,
            base: self.base.clone(),
            coeffs,
        }
    }

    fn assert_compatible(&self, other: &Jet) {
        assert!(
            Arc::ptr_eq(&self.table, &other.table),
            "jet shapes differ: ({}, {}) vs ({}, {})",
            self.nvars(),
            self.order(),
            other.nvars(),
            other.order()
        );
    }

    fn with_coeffs(&self, coeffs: Vec<f64>) -> Jet {
        Jet {
            table: self.table.clone(),
            base: self.base.clone(),
            coeffs,
        }
    }

    pub fn add(&self, other: &Jet) -> Jet {
        self.assert_compatible(other);
        self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.assert_compatible(other);
        self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    pub fn scale(&self, factor: f64) -> Jet {
        self.with_coeffs(self.coeffs.iter().map(|a| a * factor).collect())
    }

    pub fn add_scalar(&self, value: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    /// Truncated product.
    pub fn mul(&self, other: &Jet) -> Jet {
        self.assert_compatible(other);
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(a, b, c) in &self.table.products {
            coeffs[c] += self.coeffs[a] * other.coeffs[b];
        }
        self.with_coeffs(coeffs)
    }

    /// Non-negative integer power by repeated squaring.
    pub fn powu(&self, mut exponent: u32) -> Jet {
        let mut acc = Jet::constant_shared(self.base.clone(), self.order(), 1.0);
        let mut sq = self.clone();
        while exponent > 0 {
            if exponent & 1 == 1 {
                acc = acc.mul(&sq);
            }
            exponent >>= 1;
            if exponent > 0 {
                sq = sq.mul(&sq);
            }
        }
        acc
    }

    /// Compose with a univariate function given its scaled derivatives at the
    /// current value: `taylor[m] = f^(m)(a) / m!`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let order = self.order();
        assert!(taylor.len() > order);
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut out = Jet::constant_shared(self.base.clone(), order, taylor[0]);
        let mut power = Jet::constant_shared(self.base.clone(), order, 1.0);
        for coeff in taylor.iter().take(order + 1).skip(1) {
            power = power.mul(&h);
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o += coeff * p;
            }
        }
        out
    }

    /// Reciprocal; the caller guarantees a nonzero value.
    pub fn recip(&self) -> Jet {
        let a = self.value();
        let taylor: Vec<f64> = (0..=self.order())
            .map(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                sign / a.powi(m as i32 + 1)
            })
            .collect();
        self.compose(&taylor)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (alpha, c) in self.table.indices.iter().zip(&self.coeffs) {
            map.entry(alpha, c);
        }
        map.finish()
    }
}

/// Scaled derivatives `binom(p, m) a^(p-m)` of `x^p` at `a`, for `m = 0..=order`.
pub(crate) fn power_taylor(a: f64, p: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    for m in 0..=order {
        if m > 0 {
            binom *= (p - (m as f64 - 1.0)) / m as f64;
        }
        out.push(binom * a.powf(p - m as f64));
    }
    out
}
