//! Operator displays as matrices that are linear in the derivative symbols
//! `r1x, r2x, r3x`, and the mechanical extraction of `b^{ij}_k` from them.

use crate::exprkit::{parse_expr_with_names, Expr};
use crate::geomtensor::ConnectionField;

use super::DriftError;

/// Index of the first derivative symbol: `r^k_x` is variable `OFFSET + k`.
pub const OFFSET: usize = 3;

/// Parses over `r1..r3` and `r1x..r3x`. Only for literals in this crate.
pub fn pe(text: &str) -> Expr {
    let names: Vec<String> = ["r1", "r2", "r3", "r1x", "r2x", "r3x"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    parse_expr_with_names(text, 2 * OFFSET, &names)
        .unwrap_or_else(|e| panic!("bad literal {text:?}: {e}"))
}

/// `e^{r2 - r1}`.
pub fn e21() -> Expr {
    pe("exp(r2 - r1)")
}

/// `e^{r1 - r2}`.
pub fn e12() -> Expr {
    pe("exp(r1 - r2)")
}

/// `b^{ij}_k` = coefficient of `r^k_x` in `prefactor · m[i][j]`.
pub fn connection_from_printed(
    n: usize,
    prefactor: &Expr,
    m: &[Vec<Expr>],
) -> Result<ConnectionField, DriftError> {
    let mut b = ConnectionField::zeros(n);
    let fields: Vec<usize> = (0..n).collect();
    for (i, row) in m.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            let full = Expr::mul(prefactor.clone(), entry.clone());
            for k in 0..n {
                let coeff = full.derivative(OFFSET + k);
                if !coeff.depends_only_on(&fields) {
                    return Err(DriftError::NotLinear(format!(
                        "entry ({}, {}) = {entry}",
                        i + 1,
                        j + 1
                    )));
                }
                b.set(i, j, k, coeff);
            }
        }
    }
    Ok(b)
}

/// Parse a matrix of literals.
pub fn matrix(rows: &[&[&str]]) -> Vec<Vec<Expr>> {
    rows.iter()
        .map(|r| r.iter().map(|s| pe(s)).collect())
        .collect()
}
