use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::{CpMap, DensityMatrix};
use crate::error::{Error, Result};
use crate::numerics::{c64, ComplexMatrix, HermitianMatrix, C64};

pub fn random_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub(crate) fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-distributed isometry C^cols → C^rows: Gram–Schmidt (QR with positive
/// diagonal of R) applied to a complex Gaussian matrix.
pub fn haar_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> Result<ComplexMatrix> {
    if cols > rows {
        return Err(Error::Dimension(format!(
            "no isometry from C^{cols} into C^{rows}"
        )));
    }
    let g = gaussian_matrix(rows, cols, rng);
    let mut q = ComplexMatrix::zeros(rows, cols);
    for j in 0..cols {
        let mut v = g.col(j);
        // Two passes keep the columns orthogonal to working precision.
        for _ in 0..2 {
            for k in 0..j {
                let proj: C64 = (0..rows).map(|i| q[(i, k)].conj() * v[i]).sum();
                for (i, vi) in v.iter_mut().enumerate() {
                    *vi -= proj * q[(i, k)];
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::Degenerate(
                "Gaussian sample is rank deficient".into(),
            ));
        }
        for (i, vi) in v.iter().enumerate() {
            q[(i, j)] = vi / norm;
        }
    }
    Ok(q)
}

/// Unital cp map whose Stinespring operator V: C^n → C^d ⊗ C^m is a Haar
/// isometry; the Kraus operators are the slices K_i[a, ·] = V[a·m + i, ·].
pub fn random_channel(d: usize, n: usize, m: usize, seed: u64) -> Result<CpMap> {
    if d == 0 || n == 0 || m == 0 {
        return Err(Error::Dimension("d, n and m must be positive".into()));
    }
    if d * m < n {
        return Err(Error::Dimension(format!(
            "d*m = {} is smaller than n = {n}: no isometric dilation exists",
            d * m
        )));
    }
    let mut rng = random_rng(seed);
    let v = haar_isometry(d * m, n, &mut rng)?;
    CpMap::from_kraus(d, n, kraus_slices(&v, d, n, m))
}

pub(crate) fn kraus_slices(v: &ComplexMatrix, d: usize, n: usize, m: usize) -> Vec<ComplexMatrix> {
    (0..m)
        .map(|i| ComplexMatrix::from_fn(d, n, |a, col| v[(a * m + i, col)]))
        .collect()
}

/// Generally non-unital cp map: a random channel followed by the compression
/// a ↦ B† a B with B = G/√n for an n×n complex Gaussian G drawn from the
/// same seeded stream, so that T(1) = B†B has expected value 1.
pub fn random_cp_map(d: usize, n: usize, m: usize, seed: u64) -> Result<CpMap> {
    let t = random_channel(d, n, m, seed)?;
    let mut rng = random_rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let b = gaussian_matrix(n, n, &mut rng).scale(1.0 / (n as f64).sqrt());
    let kraus = t.kraus().iter().map(|k| k.matmul(&b)).collect();
    CpMap::from_kraus(d, n, kraus)
}

/// Random full-rank density matrix G G† / tr(G G†) with G Gaussian (n × n).
pub fn random_density(n: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = gaussian_matrix(n, n, rng);
    let m = HermitianMatrix::from_hermitian_part(&g.matmul(&g.adjoint()));
    DensityMatrix::normalized(&m).expect("Gaussian sample has positive trace")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_is_unital_and_cp() {
        for (d, n, m) in [(2, 2, 1), (2, 2, 3), (3, 2, 1), (2, 3, 2), (3, 3, 2)] {
            let t = random_channel(d, n, m, 17).unwrap();
            let one = t.evaluate_at_identity();
            assert!((one.as_matrix() - &ComplexMatrix::identity(n)).max_abs() < 1e-12);
            assert!(super::super::min_choi_eigenvalue(&t) > -1e-12);
        }
    }

    #[test]
    fn same_seed_same_map() {
        let a = random_channel(2, 2, 2, 99).unwrap();
        let b = random_channel(2, 2, 2, 99).unwrap();
        assert_eq!(a.kraus(), b.kraus());
        let c = random_channel(2, 2, 2, 100).unwrap();
        assert!(a.choi().distance(c.choi()) > 1e-3);
    }

    #[test]
    fn rejects_too_small_dilation_space() {
        assert!(matches!(
            random_channel(1, 3, 2, 0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn cp_map_is_not_unital_in_general() {
        let t = random_cp_map(2, 2, 2, 4).unwrap();
        let one = t.evaluate_at_identity();
        assert!((one.as_matrix() - &ComplexMatrix::identity(2)).max_abs() > 1e-3);
    }
}
