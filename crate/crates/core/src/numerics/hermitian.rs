use std::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::matrix::{c64, ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Anti-Hermitian part tolerated (and removed) on construction.
pub const HERMITICITY_TOL: f64 = 1e-8;
/// Negative eigenvalues down to this level are clipped to zero.
pub const PSD_CLIP: f64 = 1e-10;
/// Below this an input is treated as genuinely indefinite.
pub const PSD_REJECT: f64 = 1e-8;

/// Square complex matrix equal to its adjoint. Symmetrized on construction.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        m.ensure_square()?;
        m.ensure_finite()?;
        let defect = m.anti_hermitian_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self(m.hermitian_part()))
    }

    /// Symmetrizes without checking the size of the anti-Hermitian part.
    pub fn from_hermitian_part(m: &ComplexMatrix) -> Self {
        Self(m.hermitian_part())
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn diag(values: &[f64]) -> Self {
        Self(ComplexMatrix::diag_real(values))
    }

    /// v v†.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        Self(ComplexMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace_re(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    /// X† H X, Hermitian by construction.
    pub fn congruence(&self, x: &ComplexMatrix) -> Self {
        Self::from_hermitian_part(&x.adjoint_mul(&self.0.matmul(x)))
    }

    /// Re tr(H X) for Hermitian H, X.
    pub fn pair(&self, other: &Self) -> f64 {
        self.0.trace_product(&other.0).re
    }

    pub fn eigh(&self) -> Eigh {
        jacobi_eigh(&self.0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    /// Applies a real function to the spectrum: U f(Λ) U†.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let e = self.eigh();
        e.reassemble(&e.values.iter().map(|&l| f(l)).collect::<Vec<_>>())
    }

    /// Checks positivity up to the rejection threshold.
    pub fn ensure_psd(&self) -> Result<()> {
        let lmin = self.min_eigenvalue();
        if lmin < -PSD_REJECT {
            Err(Error::NotPsd {
                min_eigenvalue: lmin,
            })
        } else {
            Ok(())
        }
    }
}

impl Deref for HermitianMatrix {
    type Target = ComplexMatrix;
    fn deref(&self) -> &ComplexMatrix {
        &self.0
    }
}

impl std::fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Hermitian{:?}", self.0)
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(deserializer)?;
        HermitianMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Spectral decomposition with ascending eigenvalues; `vectors` holds the
/// eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.col(k)
    }

    /// U diag(values) U†.
    pub fn reassemble(&self, values: &[f64]) -> HermitianMatrix {
        let n = self.vectors.rows();
        let u = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &l) in values.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            for i in 0..n {
                let a = u[(i, k)] * l;
                for j in 0..n {
                    out[(i, j)] += a * u[(j, k)].conj();
                }
            }
        }
        HermitianMatrix::from_hermitian_part(&out)
    }
}

/// Eigendecomposition of a Hermitian matrix, rejecting inputs whose
/// anti-Hermitian part exceeds the construction tolerance.
pub fn eigh(m: &ComplexMatrix) -> Result<Eigh> {
    Ok(HermitianMatrix::new(m.clone())?.eigh())
}

/// Cyclic complex Jacobi. Each rotation first removes the phase of the
/// pivot, then applies the real symmetric rotation.
fn jacobi_eigh(m: &ComplexMatrix) -> Eigh {
    let n = m.rows();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 || r <= 1e-18 * scale {
                    a[(p, q)] = c64(0.0, 0.0);
                    a[(q, p)] = c64(0.0, 0.0);
                    continue;
                }
                let phase = apq / r; // e^{iφ}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
                let g_pp = c64(c, 0.0);
                let g_pq = c64(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;
                // columns: A ← A G
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                // rows: A ← G† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = c64(0.0, 0.0);
                a[(q, p)] = c64(0.0, 0.0);
                a[(p, p)] = c64(a[(p, p)].re, 0.0);
                a[(q, q)] = c64(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Eigh { values, vectors }
}

/// Positive square root. Eigenvalues in [−1e-8, 0) are clipped to zero.
pub fn psd_sqrt(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    let e = m.eigh();
    if let Some(&lmin) = e.values.first() {
        if lmin < -PSD_REJECT {
            return Err(Error::NotPsd {
                min_eigenvalue: lmin,
            });
        }
    }
    let roots: Vec<f64> = e.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    Ok(e.reassemble(&roots))
}

/// Moore–Penrose inverse square root on the support (eigenvalues above
/// `cutoff`); zero on the kernel.
pub fn psd_inv_sqrt(m: &HermitianMatrix, cutoff: f64) -> Result<HermitianMatrix> {
    let e = m.eigh();
    if let Some(&lmin) = e.values.first() {
        if lmin < -PSD_REJECT {
            return Err(Error::NotPsd {
                min_eigenvalue: lmin,
            });
        }
    }
    let vals: Vec<f64> = e
        .values
        .iter()
        .map(|&l| if l > cutoff { 1.0 / l.sqrt() } else { 0.0 })
        .collect();
    Ok(e.reassemble(&vals))
}

/// Orthogonal projector onto the eigenvectors whose eigenvalue lies in
/// `[lo, hi]`.
pub fn spectral_projector(m: &HermitianMatrix, lo: f64, hi: f64) -> HermitianMatrix {
    let e = m.eigh();
    let ind: Vec<f64> = e
        .values
        .iter()
        .map(|&l| if l >= lo && l <= hi { 1.0 } else { 0.0 })
        .collect();
    e.reassemble(&ind)
}
