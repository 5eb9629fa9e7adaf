use serde::Serialize;

use crate::cpmaps::{random_rng, DensityMatrix, HermMap};
use crate::error::{Error, Result};
use crate::numerics::{c64, psd_sqrt, trace_norm, ComplexMatrix, HermitianMatrix};
use crate::sdp::{self, Block, Functional, Relation, SdpProblem, Sense, SolverOptions};

/// Stabilized norm of a Hermiticity-preserving map with its certificates.
#[derive(Clone, Debug, Serialize)]
pub struct CbNorm {
    /// ‖(1 ⊗ √ρ*) J (1 ⊗ √ρ*)‖₁ at the optimal input state ρ*.
    pub value: f64,
    pub sdp_primal: f64,
    /// Upper bound from the dual program.
    pub sdp_dual: f64,
    pub gap: f64,
    /// Best value of the pure-input ascent; a lower bound.
    pub heuristic: f64,
    pub rho_star: DensityMatrix,
    pub iterations: usize,
}

/// (1_d ⊗ B)† J (1_d ⊗ B) for an n×n matrix B.
pub fn sandwich(j: &ComplexMatrix, d: usize, b: &ComplexMatrix) -> ComplexMatrix {
    let big = ComplexMatrix::identity(d).kron(b);
    big.adjoint_mul(&j.matmul(&big))
}

/// The cb-norm of F: M_d → M_n, computed as
///
///   max ⟨J, P0 − P1⟩  s.t.  P0 + P1 = 1_d ⊗ ρ,  tr ρ = 1,  P0, P1, ρ ⪰ 0,
///
/// equivalently max over states ρ of ‖(1 ⊗ √ρ) J (1 ⊗ √ρ)‖₁.
pub fn cb_norm(f: &HermMap) -> Result<CbNorm> {
    let (d, n) = (f.d_in(), f.d_out());
    let j = f.choi().as_matrix();
    let dn = d * n;

    if j.max_abs() == 0.0 {
        return Ok(CbNorm {
            value: 0.0,
            sdp_primal: 0.0,
            sdp_dual: 0.0,
            gap: 0.0,
            heuristic: 0.0,
            rho_star: DensityMatrix::maximally_mixed(n),
            iterations: 0,
        });
    }

    let mut p = SdpProblem::new(
        Sense::Maximize,
        vec![Block::hermitian(dn), Block::hermitian(dn), Block::hermitian(n)],
    );
    p.objective.add_matrix(0, j).add_matrix(1, &j.scale(-1.0));
    for r in 0..dn {
        for c in r..dn {
            let same_factor = r / n == c / n;
            let (pr, pc) = (r % n, c % n);
            let mut re = Functional::new();
            re.add_re_entry(0, r, c, 1.0).add_re_entry(1, r, c, 1.0);
            if same_factor {
                re.add_re_entry(2, pr, pc, -1.0);
            }
            p.constrain(re, Relation::Eq, 0.0);
            if r != c {
                let mut im = Functional::new();
                im.add_im_entry(0, r, c, 1.0).add_im_entry(1, r, c, 1.0);
                if same_factor {
                    im.add_im_entry(2, pr, pc, -1.0);
                }
                p.constrain(im, Relation::Eq, 0.0);
            }
        }
    }
    let mut tr = Functional::new();
    tr.add_matrix(2, &ComplexMatrix::identity(n));
    p.constrain(tr, Relation::Eq, 1.0);

    // A stalled solve still carries a usable iterate: the value is
    // re-evaluated exactly at its state and the gap is reported.
    let sol = match sdp::solve_with(&p, &SolverOptions::precise()) {
        Ok(sol) => sol,
        Err(Error::NoConvergence { best: Some(b), .. }) => *b,
        Err(e) => return Err(e),
    };
    let rho = DensityMatrix::normalized(&sol.primal[2])?;
    let value = cb_objective(j, d, rho.matrix())?;
    let heuristic = cb_ascent(j, d, n, 4, 0x00c0_ffee)?;
    Ok(CbNorm {
        value: value.max(heuristic),
        sdp_primal: sol.primal_value,
        sdp_dual: sol.dual_value,
        gap: sol.gap,
        heuristic,
        rho_star: rho,
        iterations: sol.iterations,
    })
}

/// ‖(1 ⊗ √ρ) J (1 ⊗ √ρ)‖₁.
pub fn cb_objective(j: &ComplexMatrix, d: usize, rho: &HermitianMatrix) -> Result<f64> {
    let s = psd_sqrt(rho)?;
    trace_norm(&sandwich(j, d, s.as_matrix()))
}

/// Alternating ascent of f(B) = ‖(1 ⊗ B)† J (1 ⊗ B)‖₁ over ‖B‖_F = 1 (pure
/// inputs on the doubled space). With H = sign(M(B)), the quadratic form
/// B ↦ tr(H M(B)) is maximized by a top eigenvector; f never decreases.
/// Starts from the maximally entangled input and `random_starts` seeded
/// Gaussian inputs; returns the best value.
pub fn cb_ascent(j: &ComplexMatrix, d: usize, n: usize, random_starts: usize, seed: u64) -> Result<f64> {
    let mut starts = vec![ComplexMatrix::identity(n).scale(1.0 / (n as f64).sqrt())];
    let mut rng = random_rng(seed);
    for _ in 0..random_starts {
        let g = crate::cpmaps::gaussian_matrix(n, n, &mut rng);
        let norm = g.frobenius_norm();
        starts.push(g.scale(1.0 / norm));
    }
    let mut best = 0.0f64;
    for b0 in starts {
        let mut b = b0;
        let mut value = trace_norm(&sandwich(j, d, &b))?;
        for _ in 0..300 {
            let m = HermitianMatrix::from_hermitian_part(&sandwich(j, d, &b));
            let h = m.map_spectrum(|x| if x >= 0.0 { 1.0 } else { -1.0 });
            let k = ascent_kernel(j, d, n, h.as_matrix());
            let e = k.eigh();
            let top = e.vector(n * n - 1);
            let next = ComplexMatrix::from_vec(n, n, top)?;
            let next_value = trace_norm(&sandwich(j, d, &next))?;
            if next_value <= value * (1.0 + 1e-13) + 1e-15 {
                if next_value > value {
                    value = next_value;
                }
                break;
            }
            b = next;
            value = next_value;
        }
        best = best.max(value);
    }
    Ok(best)
}

/// K_{(p,p'),(q,q')} = Σ_{a,a'} J_{(a,p),(a',q)} H_{(a',q'),(a,p')}, so that
/// tr(H M(B)) = vec(B)† K vec(B).
fn ascent_kernel(j: &ComplexMatrix, d: usize, n: usize, h: &ComplexMatrix) -> HermitianMatrix {
    let mut k = ComplexMatrix::zeros(n * n, n * n);
    for p in 0..n {
        for q in 0..n {
            for a in 0..d {
                for a2 in 0..d {
                    let jv = j[(a * n + p, a2 * n + q)];
                    if jv == c64(0.0, 0.0) {
                        continue;
                    }
                    for pp in 0..n {
                        for qq in 0..n {
                            k[(p * n + pp, q * n + qq)] += jv * h[(a2 * n + qq, a * n + pp)];
                        }
                    }
                }
            }
        }
    }
    HermitianMatrix::from_hermitian_part(&k)
}
