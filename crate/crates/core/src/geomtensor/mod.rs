//! Pointwise geometry of a contravariant metric field.
//!
//! Index conventions, used everywhere in the crate:
//! - `g^{ij}` is the contravariant metric, `g_{ij}` its inverse.
//! - `b^{ij}_k` multiplies `u^k_x` in entry `(i, j)` of a local operator and
//!   relates to the connection by `b^{ij}_k = -g^{is} Γ^j_{sk}`.
//! - `Γ^j_{sk}` is stored at `(j, s, k)`.
//! - `R^j_{skl}` is stored at `(j, s, k, l)` and `R^{ij}_{kl} = g^{is} R^j_{skl}`
//!   at `(i, j, k, l)`.

mod fields;
mod tensor;

pub use fields::{AffinorField, ConnectionField, MetricField, Sign};
pub use tensor::{Tensor3, Tensor4};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::exprkit::{EvalError, Jet, Point};

/// Minimum `|det|` of the row-max-scaled metric.
pub const DEGENERACY_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("degenerate metric at {point}: scaled det = {det:.3e}")]
    DegenerateMetric { det: f64, point: Point },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("shape error: {0}")]
    Shape(String),
}

/// Determinant after dividing each row by its largest magnitude.
pub fn scaled_det(m: &DMatrix<f64>) -> f64 {
    let mut s = m.clone();
    for mut row in s.row_iter_mut() {
        let max = row.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if max == 0.0 {
            return 0.0;
        }
        row /= max;
    }
    s.determinant()
}

fn checked_inverse(m: &DMatrix<f64>, p: &Point) -> Result<DMatrix<f64>, GeomError> {
    let det = scaled_det(m);
    if !(det.abs() >= DEGENERACY_FLOOR) {
        return Err(GeomError::DegenerateMetric {
            det,
            point: p.clone(),
        });
    }
    m.clone().try_inverse().ok_or(GeomError::DegenerateMetric {
        det,
        point: p.clone(),
    })
}

/// Covariant metric `g_{ij}(p)`.
pub fn invert_metric(g: &MetricField, p: &Point) -> Result<DMatrix<f64>, GeomError> {
    checked_inverse(&g.eval(p)?, p)
}

/// `Γ^j_{sk} = -g_{is} b^{ij}_k`.
pub fn christoffel_from_b(
    g: &MetricField,
    b: &ConnectionField,
    p: &Point,
) -> Result<Tensor3, GeomError> {
    let gl = invert_metric(g, p)?;
    let bv = b.eval(p)?;
    Ok(christoffel_from_values(&gl, &bv))
}

pub fn christoffel_from_values(g_lower: &DMatrix<f64>, b: &Tensor3) -> Tensor3 {
    let n = b.dim();
    let mut gamma = Tensor3::zeros(n);
    for j in 0..n {
        for s in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc -= g_lower[(i, s)] * b[(i, j, k)];
                }
                gamma[(j, s, k)] = acc;
            }
        }
    }
    gamma
}

/// Levi-Civita symbols of `g_{ij}`, using `∂g_lower = -g_lower (∂g_upper) g_lower`.
pub fn levi_civita(g: &MetricField, p: &Point) -> Result<Tensor3, GeomError> {
    let n = g.dim();
    let jets = g.jets(p, 1)?;
    let gu = DMatrix::from_fn(n, n, |i, j| jets[i][j].value());
    let gl = checked_inverse(&gu, p)?;
    let dgl: Vec<DMatrix<f64>> = (0..n)
        .map(|k| {
            let dgu = DMatrix::from_fn(n, n, |i, j| jets[i][j].d(k));
            -(&gl * dgu * &gl)
        })
        .collect();
    let mut gamma = Tensor3::zeros(n);
    for j in 0..n {
        for s in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for m in 0..n {
                    acc += gu[(j, m)] * (dgl[k][(m, s)] + dgl[s][(m, k)] - dgl[m][(s, k)]);
                }
                gamma[(j, s, k)] = 0.5 * acc;
            }
        }
    }
    Ok(gamma)
}

/// Curvature of the Levi-Civita connection at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Curvature {
    /// `R^j_{skl}`.
    pub lowered: Tensor4,
    /// `R^{ij}_{kl}`.
    pub raised: Tensor4,
    /// Largest single term entering any component of `lowered`.
    pub scale: f64,
    /// Bound on the largest single term entering any component of `raised`.
    pub raised_scale: f64,
}

/// Levi-Civita symbols and curvature at `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFrame {
    pub point: Point,
    pub g_upper: DMatrix<f64>,
    pub g_lower: DMatrix<f64>,
    pub gamma: Tensor3,
    pub curvature: Curvature,
}

impl PointFrame {
    pub fn new(g: &MetricField, p: &Point) -> Result<PointFrame, GeomError> {
        let n = g.dim();
        let base = p.coords();
        let gu_jets = g.jets(p, 2)?;
        let gu = DMatrix::from_fn(n, n, |i, j| gu_jets[i][j].value());
        let gl = checked_inverse(&gu, p)?;
        let gl_jets = jet_matrix_inverse(&gu_jets, &gl, base, 2);

        // ∂_k g_{ms} as order-1 jets
        let dgl: Vec<Vec<Vec<Jet>>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|m| (0..n).map(|s| gl_jets[m][s].differentiate(k)).collect())
                    .collect()
            })
            .collect();
        let gu1: Vec<Vec<Jet>> = gu_jets
            .iter()
            .map(|r| r.iter().map(|x| x.truncate(1)).collect())
            .collect();

        // Γ^j_{sk} as order-1 jets, flattened (j, s, k)
        let mut gamma_jets = Vec::with_capacity(n * n * n);
        for j in 0..n {
            for s in 0..n {
                for k in 0..n {
                    let mut acc = Jet::constant(base, 1, 0.0);
                    for m in 0..n {
                        let t = dgl[k][m][s].add(&dgl[s][m][k]).sub(&dgl[m][s][k]);
                        acc = acc.add(&gu1[j][m].mul(&t));
                    }
                    gamma_jets.push(acc.scale(0.5));
                }
            }
        }
        let idx = |j: usize, s: usize, k: usize| (j * n + s) * n + k;
        let gamma = Tensor3::from_vec(n, gamma_jets.iter().map(Jet::value).collect());

        let mut lowered = Tensor4::zeros(n);
        let mut scale = 0.0f64;
        for j in 0..n {
            for s in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let d1 = gamma_jets[idx(j, s, l)].d(k);
                        let d2 = gamma_jets[idx(j, s, k)].d(l);
                        scale = scale.max(d1.abs()).max(d2.abs());
                        let mut acc = d1 - d2;
                        for m in 0..n {
                            let t1 = gamma[(j, m, k)] * gamma[(m, s, l)];
                            let t2 = gamma[(j, m, l)] * gamma[(m, s, k)];
                            scale = scale.max(t1.abs()).max(t2.abs());
                            acc += t1 - t2;
                        }
                        lowered[(j, s, k, l)] = acc;
                    }
                }
            }
        }
        let raised = raise_curvature(&gu, &lowered);
        let row_sum = (0..n)
            .map(|i| (0..n).map(|s| gu[(i, s)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(PointFrame {
            point: p.clone(),
            g_upper: gu,
            g_lower: gl,
            gamma,
            curvature: Curvature {
                lowered,
                raised,
                scale,
                raised_scale: scale * row_sum,
            },
        })
    }
}

/// `R^{ij}_{kl} = g^{is} R^j_{skl}`.
pub fn raise_curvature(g_upper: &DMatrix<f64>, r: &Tensor4) -> Tensor4 {
    let n = r.dim();
    let mut out = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    out[(i, j, k, l)] = (0..n).map(|s| g_upper[(i, s)] * r[(j, s, k, l)]).sum();
                }
            }
        }
    }
    out
}

pub fn riemann_curvature(g: &MetricField, p: &Point) -> Result<Curvature, GeomError> {
    Ok(PointFrame::new(g, p)?.curvature)
}

/// Values of `∇_k w^i_j` at `(i, j, k)` plus the largest single term.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariantDerivative {
    pub values: Tensor3,
    pub scale: f64,
}

pub fn covariant_derivative_affinor(
    w: &AffinorField,
    g: &MetricField,
    p: &Point,
) -> Result<CovariantDerivative, GeomError> {
    let gamma = levi_civita(g, p)?;
    covariant_derivative_with(w, &gamma, p)
}

/// `∇_k w^i_j = ∂_k w^i_j + Γ^i_{sk} w^s_j - Γ^s_{jk} w^i_s` for a given `Γ`.
pub fn covariant_derivative_with(
    w: &AffinorField,
    gamma: &Tensor3,
    p: &Point,
) -> Result<CovariantDerivative, GeomError> {
    let n = w.dim();
    if gamma.dim() != n {
        return Err(GeomError::Shape(format!(
            "affinor has dimension {n}, connection {}",
            gamma.dim()
        )));
    }
    let jets = w.jets(p, 1)?;
    let mut values = Tensor3::zeros(n);
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let d = jets[i][j].d(k);
                scale = scale.max(d.abs());
                let mut acc = d;
                for s in 0..n {
                    let t1 = gamma[(i, s, k)] * jets[s][j].value();
                    let t2 = gamma[(s, j, k)] * jets[i][s].value();
                    scale = scale.max(t1.abs()).max(t2.abs());
                    acc += t1 - t2;
                }
                values[(i, j, k)] = acc;
            }
        }
    }
    Ok(CovariantDerivative { values, scale })
}

/// Inverse of a matrix of jets, from the Neumann series around the value
/// inverse `a0_inv`.
fn jet_matrix_inverse(
    a: &[Vec<Jet>],
    a0_inv: &DMatrix<f64>,
    base: &[f64],
    order: usize,
) -> Vec<Vec<Jet>> {
    let n = a.len();
    let constant = |m: &DMatrix<f64>| -> Vec<Vec<Jet>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Jet::constant(base, order, m[(i, j)]))
                    .collect()
            })
            .collect()
    };
    let inv0 = constant(a0_inv);
    let nilpotent: Vec<Vec<Jet>> = a
        .iter()
        .map(|r| r.iter().map(|x| x.add_scalar(-x.value())).collect())
        .collect();
    let step = jet_matmul(&inv0, &nilpotent, base, order);
    let step: Vec<Vec<Jet>> = step
        .iter()
        .map(|r| r.iter().map(Jet::neg).collect())
        .collect();
    let mut term = inv0.clone();
    let mut sum = inv0;
    for _ in 0..order {
        term = jet_matmul(&step, &term, base, order);
        for i in 0..n {
            for j in 0..n {
                sum[i][j] = sum[i][j].add(&term[i][j]);
            }
        }
    }
    sum
}

fn jet_matmul(a: &[Vec<Jet>], b: &[Vec<Jet>], base: &[f64], order: usize) -> Vec<Vec<Jet>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n).fold(Jet::constant(base, order, 0.0), |acc, k| {
                        acc.add(&a[i][k].mul(&b[k][j]))
                    })
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprkit::parse_expr;

    fn metric(rows: &[&[&str]]) -> MetricField {
        let n = rows.len();
        MetricField::new(
            rows.iter()
                .map(|r| r.iter().map(|s| parse_expr(s, n).unwrap()).collect())
                .collect(),
        )
        .unwrap()
    }

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec())
    }

    #[test]
    fn identity_metric_is_trivial() {
        let g = metric(&[&["1", "0"], &["0", "1"]]);
        let p = pt(&[0.3, -0.2]);
        assert_eq!(invert_metric(&g, &p).unwrap(), DMatrix::identity(2, 2));
        let frame = PointFrame::new(&g, &p).unwrap();
        assert_eq!(frame.gamma.max_abs(), 0.0);
        assert_eq!(frame.curvature.lowered.max_abs(), 0.0);
    }

    #[test]
    fn self_inverse_diagonal() {
        let g = metric(&[&["-exp(u2-u1)", "0"], &["0", "exp(u2-u1)"]]);
        let gl = invert_metric(&g, &pt(&[0.0, 0.0])).unwrap();
        assert_eq!(gl, DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn zero_row_is_degenerate() {
        let g = metric(&[&["1", "0"], &["0", "0*u1"]]);
        assert!(matches!(
            invert_metric(&g, &pt(&[0.5, 0.5])),
            Err(GeomError::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn one_dimensional_exponential_metric() {
        let g = metric(&[&["exp(u1)"]]);
        for x in [-0.9, 0.0, 0.4] {
            let gamma = levi_civita(&g, &pt(&[x])).unwrap();
            assert!((gamma[(0, 0, 0)] + 0.5).abs() < 1e-14);
            // finite-difference oracle: Γ = ½ g_11' / g_11 with g_11 = e^{-u}
            let h = 1e-5;
            let g11 = |u: f64| (-u).exp();
            let fd = 0.5 * (g11(x + h) - g11(x - h)) / (2.0 * h) / g11(x);
            assert!((gamma[(0, 0, 0)] - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn round_sphere_has_unit_curvature() {
        let g = metric(&[&["1", "0"], &["0", "sin(u1)^(-2)"]]);
        let theta = std::f64::consts::FRAC_PI_4;
        let c = riemann_curvature(&g, &pt(&[theta, 0.3])).unwrap();
        // sectional curvature K = R_{1212} / det(g_lower) with R_{1212} = g_{1j} R^j_{212}
        let gl = [1.0, theta.sin().powi(2)];
        let r1212 = gl[0] * c.lowered[(0, 1, 0, 1)];
        let k = r1212 / (gl[0] * gl[1]);
        assert!((k - 1.0).abs() < 1e-10, "K = {k}");
    }

    #[test]
    fn both_christoffel_paths_agree_on_flat_metric() {
        // H1: e^{r2-r1} diag(-1, 1), b from the operator's u_x-coefficients
        let g = metric(&[&["-exp(u2-u1)", "0"], &["0", "exp(u2-u1)"]]);
        let e = |s: &str| parse_expr(s, 2).unwrap();
        let mut b = ConnectionField::zeros(2);
        // -½ e^{r2-r1} [[r2x - r1x, r1x - r2x], [r2x - r1x, r1x - r2x]]
        let h = |s: f64| e(&format!("{s}*exp(u2-u1)"));
        for (i, j, s) in [(0, 0, 0.5), (0, 1, -0.5), (1, 0, 0.5), (1, 1, -0.5)] {
            b.set(i, j, 0, h(s));
            b.set(i, j, 1, h(-s));
        }
        let p = pt(&[0.2, -0.4]);
        let lc = levi_civita(&g, &p).unwrap();
        let from_b = christoffel_from_b(&g, &b, &p).unwrap();
        assert!(lc.max_abs_diff(&from_b) < 1e-12, "{lc:?} vs {from_b:?}");
        let frame = PointFrame::new(&g, &p).unwrap();
        assert!(frame.gamma.max_abs_diff(&lc) < 1e-12);
        assert!(frame.curvature.lowered.max_abs() < 1e-12);
    }

    #[test]
    fn identity_affinor_is_parallel() {
        let g = metric(&[&["exp(u1)", "u2"], &["u2", "2+u1"]]);
        let w = AffinorField::diagonal(Sign::Plus, vec![Expr::one(), Expr::one()]);
        let d = covariant_derivative_affinor(&w, &g, &pt(&[0.1, 0.2])).unwrap();
        assert!(d.values.max_abs() < 1e-14);
    }

    use crate::exprkit::Expr;
}
