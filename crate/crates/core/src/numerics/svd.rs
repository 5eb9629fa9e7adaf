use super::matrix::{c64, ComplexMatrix, C64};
use crate::error::Result;

/// Thin singular value decomposition M = U diag(s) V†, singular values
/// descending. `u` is rows × k, `v` is cols × k with k = min(rows, cols).
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    /// Σ_{s_j > cutoff} u_j v_j†.
    pub fn polar_on_support(&self, cutoff: f64) -> ComplexMatrix {
        let keep: Vec<usize> = (0..self.s.len()).filter(|&j| self.s[j] > cutoff).collect();
        self.partial_polar(&keep)
    }

    /// Σ_j u_j v_j† over all k singular pairs, zero singular values included.
    pub fn polar_full(&self) -> ComplexMatrix {
        let keep: Vec<usize> = (0..self.s.len()).collect();
        self.partial_polar(&keep)
    }

    fn partial_polar(&self, keep: &[usize]) -> ComplexMatrix {
        let (r, c) = (self.u.rows(), self.v.rows());
        let mut out = ComplexMatrix::zeros(r, c);
        for &j in keep {
            for a in 0..r {
                let ua = self.u[(a, j)];
                for b in 0..c {
                    out[(a, b)] += ua * self.v[(b, j)].conj();
                }
            }
        }
        out
    }
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    m.ensure_finite()?;
    if m.rows() >= m.cols() {
        Ok(one_sided_jacobi(m))
    } else {
        let t = one_sided_jacobi(&m.adjoint());
        Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        })
    }
}

/// Hestenes one-sided Jacobi on the columns of a tall (or square) matrix.
fn one_sided_jacobi(m: &ComplexMatrix) -> Svd {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(cols);
    let scale = m.frobenius_norm();

    if scale > 0.0 {
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..cols {
                for q in (p + 1)..cols {
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = c64(0.0, 0.0);
                    for i in 0..rows {
                        let ap = a[(i, p)];
                        let aq = a[(i, q)];
                        alpha += ap.norm_sqr();
                        beta += aq.norm_sqr();
                        gamma += ap.conj() * aq;
                    }
                    let g = gamma.norm();
                    if g <= 1e-15 * (alpha * beta).sqrt() || g <= 1e-300 {
                        continue;
                    }
                    rotated = true;
                    let phase = gamma / g;
                    let theta = (beta - alpha) / (2.0 * g);
                    let t = if theta == 0.0 {
                        1.0
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    let g_pp = c64(c, 0.0);
                    let g_pq = c64(s, 0.0);
                    let g_qp = -phase.conj() * s;
                    let g_qq = phase.conj() * c;
                    for i in 0..rows {
                        let ap = a[(i, p)];
                        let aq = a[(i, q)];
                        a[(i, p)] = ap * g_pp + aq * g_qp;
                        a[(i, q)] = ap * g_pq + aq * g_qq;
                    }
                    for i in 0..cols {
                        let vp = v[(i, p)];
                        let vq = v[(i, q)];
                        v[(i, p)] = vp * g_pp + vq * g_qp;
                        v[(i, q)] = vp * g_pq + vq * g_qq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }

    let norms: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| a[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut u = ComplexMatrix::zeros(rows, cols);
    let mut vs = ComplexMatrix::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    for (k, &j) in order.iter().enumerate() {
        let sigma = norms[j];
        s.push(sigma);
        for i in 0..cols {
            vs[(i, k)] = v[(i, j)];
        }
        if sigma > 1e-300 {
            for i in 0..rows {
                u[(i, k)] = a[(i, j)] / sigma;
            }
        }
    }
    complete_orthonormal_columns(&mut u, &s);
    Svd { u, s, v: vs }
}

/// Replaces left singular vectors belonging to (numerically) zero singular
/// values by an orthonormal completion, so that `u` has orthonormal columns.
fn complete_orthonormal_columns(u: &mut ComplexMatrix, s: &[f64]) {
    let (rows, cols) = u.shape();
    let top = s.first().copied().unwrap_or(0.0);
    let tiny = 1e-13 * top.max(1e-300);
    let mut candidate = 0;
    for k in 0..cols {
        if s[k] > tiny {
            continue;
        }
        loop {
            let mut w: Vec<C64> = (0..rows)
                .map(|i| {
                    if i == candidate % rows {
                        c64(1.0, 0.0)
                    } else {
                        c64(0.0, 0.0)
                    }
                })
                .collect();
            candidate += 1;
            for j in 0..cols {
                if j == k || (s[j] <= tiny && j > k) {
                    continue;
                }
                let proj: C64 = (0..rows).map(|i| u[(i, j)].conj() * w[i]).sum();
                for (i, wi) in w.iter_mut().enumerate() {
                    *wi -= proj * u[(i, j)];
                }
            }
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for (i, wi) in w.iter().enumerate() {
                    u[(i, k)] = wi / norm;
                }
                break;
            }
            if candidate > 4 * rows {
                break;
            }
        }
    }
}

pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(svd(m)?.s)
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Partial isometry of the polar decomposition, restricted to the support
/// of M; satisfies Re tr(u† M) = ‖M‖₁.
pub fn polar_unitary_part(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = svd(m)?;
    let cutoff = 1e-14 * d.s.first().copied().unwrap_or(0.0).max(1e-300);
    Ok(d.polar_on_support(cutoff))
}
