use serde::Serialize;

use crate::cpmaps::{CpMap, KRAUS_CUTOFF};
use crate::error::{Error, Result};
use crate::numerics::{c64, svd, ComplexMatrix, HermitianMatrix, C64};
use crate::sdp::{self, Block, Functional, Relation, SdpProblem, Sense, SolverOptions};

/// Completely positive extension T̂: M_d → M_2 ⊗ M_n of the pair (T1, T2),
/// i.e. T̂(a) = [[T1(a), T̂12(a)], [T̂21(a), T2(a)]].
#[derive(Clone, Debug, Serialize)]
pub struct CpExtension {
    d: usize,
    n: usize,
    /// Choi matrix, index i·2n + b·n + p for input i, block b, output p.
    choi: HermitianMatrix,
}

impl CpExtension {
    fn from_blocks(d: usize, n: usize, blocks: [[ComplexMatrix; 2]; 2]) -> Self {
        let side = 2 * n;
        let mut j = ComplexMatrix::zeros(d * side, d * side);
        for (b, row) in blocks.iter().enumerate() {
            for (b2, block) in row.iter().enumerate() {
                for i in 0..d {
                    for p in 0..n {
                        for k in 0..d {
                            for q in 0..n {
                                j[(i * side + b * n + p, k * side + b2 * n + q)] =
                                    block[(i * n + p, k * n + q)];
                            }
                        }
                    }
                }
            }
        }
        Self {
            d,
            n,
            choi: HermitianMatrix::from_hermitian_part(&j),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn choi(&self) -> &HermitianMatrix {
        &self.choi
    }

    /// Choi matrix (d·n × d·n) of the block map T̂_bb'.
    pub fn block(&self, b: usize, b2: usize) -> ComplexMatrix {
        let (n, side) = (self.n, 2 * self.n);
        ComplexMatrix::from_fn(self.d * n, self.d * n, |r, c| {
            let (i, p) = (r / n, r % n);
            let (k, q) = (c / n, c % n);
            self.choi[(i * side + b * n + p, k * side + b2 * n + q)]
        })
    }

    /// T̂_bb'(1).
    pub fn block_at_identity(&self, b: usize, b2: usize) -> ComplexMatrix {
        let j = self.block(b, b2);
        let n = self.n;
        ComplexMatrix::from_fn(n, n, |p, q| {
            (0..self.d).map(|i| j[(i * n + p, i * n + q)]).sum()
        })
    }

    /// T̂ as a cp map into M_{2n}.
    pub fn map(&self) -> Result<CpMap> {
        CpMap::from_choi(self.d, 2 * self.n, self.choi.clone())
    }

    /// max_b ‖J(T̂_bb) − J(T_b)‖_max.
    pub fn diagonal_residual(&self, t1: &CpMap, t2: &CpMap) -> f64 {
        let r1 = (&self.block(0, 0) - t1.choi().as_matrix()).max_abs();
        let r2 = (&self.block(1, 1) - t2.choi().as_matrix()).max_abs();
        r1.max(r2)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionResult {
    /// √t* with t* = λmax(T1(1) + T2(1) − T̂12(1) − T̂21(1)) at the optimum.
    pub beta_ext: f64,
    pub t: f64,
    pub sdp_primal: f64,
    pub sdp_dual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub extension: CpExtension,
}

/// Spectral data of a Choi matrix restricted to its support.
struct Face {
    /// Eigenvectors with eigenvalue above the Kraus cutoff, as columns.
    r: ComplexMatrix,
    lambda: Vec<f64>,
}

impl Face {
    fn new(j: &HermitianMatrix) -> Self {
        let e = j.eigh();
        let keep: Vec<usize> = (0..e.values.len())
            .filter(|&k| e.values[k] > KRAUS_CUTOFF)
            .collect();
        let r = ComplexMatrix::from_fn(j.dim(), keep.len(), |row, c| e.vectors[(row, keep[c])]);
        let lambda = keep.iter().map(|&k| e.values[k]).collect();
        Self { r, lambda }
    }

    fn rank(&self) -> usize {
        self.lambda.len()
    }
}

/// β_ext(T1, T2) = min √‖T1(1) + T2(1) − T̂12(1) − T̂21(1)‖ over cp extensions.
///
/// Every psd matrix with diagonal blocks J1, J2 is R Y R† with
/// R = R1 ⊕ R2 the support eigenvectors of J1, J2 and Y = [[Λ1, Y12], [Y12†, Λ2]] ⪰ 0,
/// so the program runs over Y, which keeps a strictly feasible point even
/// when J1 or J2 is singular:
///
///   min t   s.t.  Z = t·1 − S + X + X† ⪰ 0,  X = T̂12(1) linear in Y12,
///                 diagonal blocks of Y fixed.
///
/// The optimal Y12 is then polished: with K = Λ1^{-1/2} Y12 Λ2^{-1/2}, a
/// contraction, singular values are clamped to 1 (and, in a second
/// candidate, those within 1e-6 of 1 are rounded up); the smaller exact
/// λmax is reported.
pub fn bures_extension(t1: &CpMap, t2: &CpMap) -> Result<ExtensionResult> {
    t1.ensure_same_dims(t2)?;
    let (d, n) = (t1.d_in(), t1.d_out());
    let s = t1.evaluate_at_identity().add(&t2.evaluate_at_identity());
    let f1 = Face::new(t1.choi());
    let f2 = Face::new(t2.choi());
    let (r1, r2) = (f1.rank(), f2.rank());

    if r1 == 0 || r2 == 0 {
        let t = s.max_eigenvalue().max(0.0);
        let zero = ComplexMatrix::zeros(d * n, d * n);
        let extension = CpExtension::from_blocks(
            d,
            n,
            [
                [t1.choi().as_matrix().clone(), zero.clone()],
                [zero, t2.choi().as_matrix().clone()],
            ],
        );
        return Ok(ExtensionResult {
            beta_ext: t.sqrt(),
            t,
            sdp_primal: t,
            sdp_dual: t,
            gap: 0.0,
            iterations: 0,
            extension,
        });
    }

    // coef[p][q][a][b] = Σ_i R1[(i,p),a] conj(R2[(i,q),b]), so that
    // X[p,q] = Σ_ab coef Y12[a,b].
    let coef = |p: usize, q: usize, a: usize, b: usize| -> C64 {
        (0..d)
            .map(|i| f1.r[(i * n + p, a)] * f2.r[(i * n + q, b)].conj())
            .sum()
    };
    let mut table = vec![c64(0.0, 0.0); n * n * r1 * r2];
    let idx = |p: usize, q: usize, a: usize, b: usize| ((p * n + q) * r1 + a) * r2 + b;
    for p in 0..n {
        for q in 0..n {
            for a in 0..r1 {
                for b in 0..r2 {
                    table[idx(p, q, a, b)] = coef(p, q, a, b);
                }
            }
        }
    }

    let (y, z, tb) = (0, 1, 2);
    let mut prob = SdpProblem::new(
        Sense::Minimize,
        vec![Block::hermitian(r1 + r2), Block::hermitian(n), Block::real(1)],
    );
    prob.objective.add_re_entry(tb, 0, 0, 1.0);

    for (offset, face) in [(0, &f1), (r1, &f2)] {
        let r = face.rank();
        for a in 0..r {
            for b in a..r {
                let target = if a == b { face.lambda[a] } else { 0.0 };
                let mut re = Functional::new();
                re.add_re_entry(y, offset + a, offset + b, 1.0);
                prob.constrain(re, Relation::Eq, target);
                if a != b {
                    let mut im = Functional::new();
                    im.add_im_entry(y, offset + a, offset + b, 1.0);
                    prob.constrain(im, Relation::Eq, 0.0);
                }
            }
        }
    }

    // Z − t·1 − (X + X†) = −S entrywise. With Re(c·Y[a, r1+b]) written as the
    // term (row r1+b, col a, c), X[p,q] + conj(X[q,p]) contributes
    // (r1+b, a, coef_pq) and (a, r1+b, conj(coef_qp)).
    let off_diagonal = |f: &mut Functional, p: usize, q: usize, phase: C64| {
        for a in 0..r1 {
            for b in 0..r2 {
                let c1 = table[idx(p, q, a, b)];
                let c2 = table[idx(q, p, a, b)].conj();
                if c1 != c64(0.0, 0.0) {
                    f.add(y, r1 + b, a, -(phase * c1));
                }
                if c2 != c64(0.0, 0.0) {
                    f.add(y, a, r1 + b, -(phase * c2));
                }
            }
        }
    };
    for p in 0..n {
        for q in p..n {
            let mut re = Functional::new();
            re.add_re_entry(z, p, q, 1.0);
            if p == q {
                re.add_re_entry(tb, 0, 0, -1.0);
            }
            off_diagonal(&mut re, p, q, c64(1.0, 0.0));
            prob.constrain(re, Relation::Eq, -s[(p, q)].re);
            if p != q {
                let mut im = Functional::new();
                im.add_im_entry(z, p, q, 1.0);
                off_diagonal(&mut im, p, q, c64(0.0, -1.0));
                prob.constrain(im, Relation::Eq, -s[(p, q)].im);
            }
        }
    }

    let sol = match sdp::solve_with(&prob, &SolverOptions::precise()) {
        Ok(sol) => sol,
        Err(Error::NoConvergence { best: Some(b), .. }) => *b,
        Err(e) => return Err(e),
    };

    let y12 = sol.primal[y].submatrix(0, r1, r1, r2);
    let sqrt1: Vec<f64> = f1.lambda.iter().map(|l| l.sqrt()).collect();
    let sqrt2: Vec<f64> = f2.lambda.iter().map(|l| l.sqrt()).collect();
    let k = ComplexMatrix::from_fn(r1, r2, |a, b| y12[(a, b)] / (sqrt1[a] * sqrt2[b]));
    let dec = svd(&k)?;
    let rebuild = |values: &[f64]| -> ComplexMatrix {
        let mut kk = ComplexMatrix::zeros(r1, r2);
        for (j, &sv) in values.iter().enumerate() {
            for a in 0..r1 {
                for b in 0..r2 {
                    kk[(a, b)] += dec.u[(a, j)] * sv * dec.v[(b, j)].conj();
                }
            }
        }
        ComplexMatrix::from_fn(r1, r2, |a, b| kk[(a, b)] * sqrt1[a] * sqrt2[b])
    };
    let clamped: Vec<f64> = dec.s.iter().map(|&x| x.min(1.0)).collect();
    let rounded: Vec<f64> = dec
        .s
        .iter()
        .map(|&x| if x >= 1.0 - 1e-6 { 1.0 } else { x })
        .collect();

    let x_of = |y12: &ComplexMatrix| -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |p, q| {
            let mut acc = c64(0.0, 0.0);
            for a in 0..r1 {
                for b in 0..r2 {
                    acc += table[idx(p, q, a, b)] * y12[(a, b)];
                }
            }
            acc
        })
    };
    let t_of = |y12: &ComplexMatrix| -> f64 {
        let x = x_of(y12);
        HermitianMatrix::from_hermitian_part(&(&(s.as_matrix() - &x) - &x.adjoint()))
            .max_eigenvalue()
    };

    let (t, y12) = [rebuild(&clamped), rebuild(&rounded)]
        .into_iter()
        .map(|c| (t_of(&c), c))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("two candidates");
    let t = t.max(0.0);

    let j12 = f1.r.matmul(&y12).matmul(&f2.r.adjoint());
    let extension = CpExtension::from_blocks(
        d,
        n,
        [
            [t1.choi().as_matrix().clone(), j12.clone()],
            [j12.adjoint(), t2.choi().as_matrix().clone()],
        ],
    );
    Ok(ExtensionResult {
        beta_ext: t.sqrt(),
        t,
        sdp_primal: sol.primal_value,
        sdp_dual: sol.dual_value,
        gap: sol.gap,
        iterations: sol.iterations,
        extension,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpmaps::random_cp_map;

    #[test]
    fn equal_maps() {
        let t = random_cp_map(2, 2, 2, 11).unwrap();
        let r = bures_extension(&t, &t).unwrap();
        assert!(r.beta_ext < 1e-6, "{}", r.beta_ext);
    }

    #[test]
    fn orthogonal_unitaries() {
        let z = ComplexMatrix::diag_real(&[1.0, -1.0]);
        let r = bures_extension(&CpMap::identity(2), &CpMap::conjugation(&z).unwrap()).unwrap();
        assert!((r.beta_ext - 2f64.sqrt()).abs() < 1e-6, "{}", r.beta_ext);
    }

    #[test]
    fn extension_is_cp_with_prescribed_diagonal() {
        let t1 = random_cp_map(2, 2, 2, 1).unwrap();
        let t2 = random_cp_map(2, 2, 3, 2).unwrap();
        let r = bures_extension(&t1, &t2).unwrap();
        let ext = &r.extension;
        assert!(ext.choi().min_eigenvalue() > -1e-9);
        assert!(ext.diagonal_residual(&t1, &t2) < 1e-8);
        let x = ext.block_at_identity(0, 1);
        let s = t1.evaluate_at_identity().add(&t2.evaluate_at_identity());
        let h = HermitianMatrix::from_hermitian_part(&(&(s.as_matrix() - &x) - &x.adjoint()));
        assert!((h.max_eigenvalue().max(0.0).sqrt() - r.beta_ext).abs() < 1e-12);
        assert!(r.gap < 1e-6);
    }
}
