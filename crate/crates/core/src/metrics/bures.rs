use serde::Serialize;

use crate::cpmaps::{CpMap, DensityMatrix};
use crate::dilations::{common_pair_from_kraus, verify_dilation, Contraction, Dilation};
use crate::error::{Error, Result};
use crate::numerics::{c64, operator_norm, svd, trace_norm, ComplexMatrix, HermitianMatrix};
use crate::sdp::{self, Block, Functional, Relation, SdpProblem, SdpSolution, Sense, SolverOptions};

/// The concave function
///
///   g(ρ) = tr(ρ(T1(1) + T2(1))) − 2‖N(ρ)‖₁,   N(ρ)_ji = tr(ρ K1_i† K2_j),
///
/// over minimal Kraus families, whose maximum over states is β². For a
/// contraction w (m1×m2), Ω(w) = Σ w_ij K1_i† K2_j is the overlap V1†V2 of
/// the corresponding common pair, and λmax(S − Ω(w) − Ω(w)†) = ‖V1 − V2‖²
/// bounds g from above.
#[derive(Clone, Debug)]
pub struct BuresObjective {
    d: usize,
    n: usize,
    k1: Vec<ComplexMatrix>,
    k2: Vec<ComplexMatrix>,
    s: HermitianMatrix,
    // overlaps[i][j] = K1_i† K2_j
    overlaps: Vec<Vec<ComplexMatrix>>,
}

impl BuresObjective {
    pub fn new(t1: &CpMap, t2: &CpMap) -> Result<Self> {
        t1.ensure_same_dims(t2)?;
        let k1 = t1.minimal_kraus();
        let k2 = t2.minimal_kraus();
        let s = t1.evaluate_at_identity().add(&t2.evaluate_at_identity());
        let overlaps = k1
            .iter()
            .map(|a| k2.iter().map(|b| a.adjoint_mul(b)).collect())
            .collect();
        Ok(Self {
            d: t1.d_in(),
            n: t1.d_out(),
            k1,
            k2,
            s,
            overlaps,
        })
    }

    pub fn m1(&self) -> usize {
        self.k1.len()
    }

    pub fn m2(&self) -> usize {
        self.k2.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// T1(1) + T2(1).
    pub fn s(&self) -> &HermitianMatrix {
        &self.s
    }

    /// N(ρ), an m2×m1 matrix.
    pub fn n_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.m2(), self.m1(), |j, i| {
            rho.trace_product(&self.overlaps[i][j])
        })
    }

    pub fn value(&self, rho: &HermitianMatrix) -> Result<f64> {
        let linear = rho.pair(&self.s);
        if self.m1() == 0 || self.m2() == 0 {
            return Ok(linear);
        }
        Ok(linear - 2.0 * trace_norm(&self.n_matrix(rho.as_matrix()))?)
    }

    /// Ω(w) = Σ w_ij K1_i† K2_j.
    pub fn omega(&self, w: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.n, self.n);
        for i in 0..self.m1() {
            for j in 0..self.m2() {
                let c = w[(i, j)];
                if c != c64(0.0, 0.0) {
                    out += &self.overlaps[i][j].scale_c(c);
                }
            }
        }
        out
    }

    /// S − Ω(w) − Ω(w)†.
    pub fn hamiltonian(&self, w: &ComplexMatrix) -> HermitianMatrix {
        let o = self.omega(w);
        HermitianMatrix::from_hermitian_part(&(&(self.s.as_matrix() - &o) - &o.adjoint()))
    }

    /// λmax(S − Ω(w) − Ω(w)†).
    pub fn witness_value(&self, w: &ComplexMatrix) -> f64 {
        self.hamiltonian(w).max_eigenvalue()
    }

    /// Contractions attaining Re tr(wN(ρ)) = ‖N(ρ)‖₁: the adjoint of the full
    /// polar part of N(ρ) and the adjoint of its partial isometry on the
    /// support.
    pub fn polar_witnesses(&self, rho: &ComplexMatrix) -> Result<[ComplexMatrix; 2]> {
        let f = svd(&self.n_matrix(rho))?;
        let cutoff = 1e-10 * f.s.first().copied().unwrap_or(0.0).max(1e-300);
        Ok([f.polar_full().adjoint(), f.polar_on_support(cutoff).adjoint()])
    }
}

/// Result of the supergradient ascent on g.
#[derive(Clone, Debug, Serialize)]
pub struct FrankWolfe {
    /// Best g(ρ) seen.
    pub lower: f64,
    /// Smallest λmax(S − Ω(w) − Ω(w)†) seen.
    pub upper: f64,
    pub iterations: usize,
    pub rho: DensityMatrix,
    pub w: ComplexMatrix,
}

/// Frank–Wolfe ascent on g from the maximally mixed state. At ρ the polar
/// contraction w gives a supergradient of g, the linear oracle is the top
/// eigenvector of S − Ω(w) − Ω(w)†, and the step length comes from a golden
/// section search along the segment.
pub fn frank_wolfe(obj: &BuresObjective, max_iterations: usize, tol: f64) -> Result<FrankWolfe> {
    let n = obj.n();
    let mut rho = HermitianMatrix::identity(n).scale(1.0 / n as f64);
    let mut lower = obj.value(&rho)?;
    let mut best_rho = rho.clone();
    let mut upper = f64::INFINITY;
    let mut best_w = ComplexMatrix::zeros(obj.m1(), obj.m2());
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let [w, _] = obj.polar_witnesses(rho.as_matrix())?;
        let e = obj.hamiltonian(&w).eigh();
        let top = e.values[n - 1];
        if top < upper {
            upper = top;
            best_w = w;
        }
        if upper - lower <= tol {
            break;
        }
        let vertex = HermitianMatrix::outer(&e.vector(n - 1));
        let along = |gamma: f64| -> Result<f64> {
            obj.value(&rho.scale(1.0 - gamma).add(&vertex.scale(gamma)))
        };
        let gamma = golden_section(along, 60)?;
        let next = rho.scale(1.0 - gamma).add(&vertex.scale(gamma));
        let value = obj.value(&next)?;
        if value > lower {
            lower = value;
            best_rho = next.clone();
        }
        if gamma == 0.0 {
            break;
        }
        rho = next;
    }
    Ok(FrankWolfe {
        lower,
        upper,
        iterations,
        rho: DensityMatrix::normalized(&best_rho)?,
        w: best_w,
    })
}

/// Maximizer over [0, 1] of a concave function; the endpoint 0 is returned
/// when nothing beats it.
fn golden_section(f: impl Fn(f64) -> Result<f64>, steps: usize) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..steps {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        }
    }
    let mid = 0.5 * (a + b);
    let f0 = f(0.0)?;
    let f_end = f(1.0)?;
    let fm = f(mid)?;
    Ok(if f_end >= fm && f_end > f0 {
        1.0
    } else if fm > f0 {
        mid
    } else {
        0.0
    })
}

/// Optimal state, contraction and common dilations for the Bures distance.
#[derive(Clone, Debug, Serialize)]
pub struct BuresWitness {
    /// √g(ρ*).
    pub beta: f64,
    /// g(ρ*), a certified lower bound on β².
    pub lower_sq: f64,
    /// ‖V1 − V2‖², a certified upper bound on β².
    pub upper_sq: f64,
    pub rho_star: DensityMatrix,
    pub w_star: Contraction,
    pub v1: Dilation,
    pub v2: Dilation,
    /// ‖V1 − V2‖.
    pub witness_distance: f64,
    /// Largest residual of V1, V2 against T1, T2.
    pub dilation_residual: f64,
    pub sdp_primal: f64,
    pub sdp_dual: f64,
    pub sdp_gap: f64,
    pub sdp_iterations: usize,
    pub frank_wolfe: FrankWolfe,
    /// Whether the ascent closed to within 1e-4 of the returned β².
    pub frank_wolfe_agrees: bool,
}

/// Tolerance for the agreement of the ascent with the SDP value of β².
pub const FRANK_WOLFE_AGREEMENT: f64 = 1e-4;

/// β(T1, T2) with an optimal common pair of dilations.
///
/// β² = max_ρ g(ρ) is solved as the SDP
///
///   max Re tr(Sρ) − tr Q   s.t.  Q = [[A, N(ρ)†], [N(ρ), B]] ⪰ 0,  tr ρ = 1,
///
/// whose optimal value equals max g because ‖N‖₁ = min { (tr A + tr B)/2 }
/// over such blocks. The witness contraction is chosen among the dual
/// multiplier of the off-diagonal block and the polar contractions at ρ*,
/// taking the one minimizing ‖V1 − V2‖.
pub fn bures(t1: &CpMap, t2: &CpMap) -> Result<BuresWitness> {
    let obj = BuresObjective::new(t1, t2)?;
    if t1.is_zero() && t2.is_zero() {
        return Err(Error::Degenerate("both maps are zero".into()));
    }
    let (m1, m2, n) = (obj.m1(), obj.m2(), obj.n());

    let (rho, w, sol) = if m1 == 0 || m2 == 0 {
        // No overlap term: g is linear.
        let e = obj.s().eigh();
        let rho = HermitianMatrix::outer(&e.vector(n - 1));
        (rho, ComplexMatrix::zeros(m1, m2), None)
    } else {
        let sol = solve_program(&obj)?;
        let rho = DensityMatrix::normalized(&sol.primal[0])?.into_inner();
        let zq = sol.dual_slack[1].as_matrix();
        let upper_right = zq.submatrix(0, m1, m1, m2);
        let mut candidates = vec![upper_right.scale(-1.0), upper_right];
        candidates.extend(obj.polar_witnesses(rho.as_matrix())?);
        (rho, best_contraction(&obj, candidates)?, Some(sol))
    };

    let fw = frank_wolfe(&obj, 400, 1e-9)?;
    let (rho, lower_sq) = {
        let at_sdp = obj.value(&rho)?;
        if fw.lower > at_sdp {
            (fw.rho.matrix().clone(), fw.lower)
        } else {
            (rho, at_sdp)
        }
    };
    let w = if m1 > 0 && m2 > 0 {
        best_contraction(&obj, vec![w, fw.w.clone()])?
    } else {
        w
    };

    let w_star = Contraction::new(w)?;
    let (v1, v2) = common_pair_from_kraus(obj.d, obj.n, &obj.k1, &obj.k2, &w_star)?;
    let witness_distance = v1.distance(&v2)?;
    let dilation_residual = verify_dilation(&v1, t1)?.max(verify_dilation(&v2, t2)?);
    let upper_sq = witness_distance * witness_distance;
    let frank_wolfe_agrees = (lower_sq - fw.lower).abs() <= FRANK_WOLFE_AGREEMENT;
    let (sdp_primal, sdp_dual, sdp_gap, sdp_iterations) = match &sol {
        Some(s) => (s.primal_value, s.dual_value, s.gap, s.iterations),
        None => (lower_sq, lower_sq, 0.0, 0),
    };
    Ok(BuresWitness {
        beta: lower_sq.max(0.0).sqrt(),
        lower_sq,
        upper_sq,
        rho_star: DensityMatrix::normalized(&rho)?,
        w_star,
        v1,
        v2,
        witness_distance,
        dilation_residual,
        sdp_primal,
        sdp_dual,
        sdp_gap,
        sdp_iterations,
        frank_wolfe: fw,
        frank_wolfe_agrees,
    })
}

/// Solves the epigraph program. A stalled solve still yields a usable
/// iterate: every value reported downstream is re-evaluated exactly.
fn solve_program(obj: &BuresObjective) -> Result<SdpSolution> {
    let (m1, m2, n) = (obj.m1(), obj.m2(), obj.n());
    let mut p = SdpProblem::new(
        Sense::Maximize,
        vec![Block::hermitian(n), Block::hermitian(m1 + m2)],
    );
    p.objective
        .add_matrix(0, obj.s().as_matrix())
        .add_matrix(1, &ComplexMatrix::identity(m1 + m2).scale(-1.0));
    for i in 0..m1 {
        for j in 0..m2 {
            let m = &obj.overlaps[i][j];
            // Re and Im of Q[m1 + j, i] − tr(ρ M_ij).
            let mut re = Functional::new();
            re.add_re_entry(1, m1 + j, i, 1.0).add_matrix(0, &m.scale(-1.0));
            p.constrain(re, Relation::Eq, 0.0);
            let mut im = Functional::new();
            im.add_im_entry(1, m1 + j, i, 1.0)
                .add_matrix(0, &m.scale_c(c64(0.0, 1.0)));
            p.constrain(im, Relation::Eq, 0.0);
        }
    }
    let mut tr = Functional::new();
    tr.add_matrix(0, &ComplexMatrix::identity(n));
    p.constrain(tr, Relation::Eq, 1.0);

    match sdp::solve_with(&p, &SolverOptions::precise()) {
        Ok(sol) => Ok(sol),
        Err(Error::NoConvergence { best: Some(b), .. }) => Ok(*b),
        Err(e) => Err(e),
    }
}

/// Among the candidates, rescaled into the unit ball where needed, the one
/// with the smallest λmax(S − Ω(w) − Ω(w)†).
fn best_contraction(obj: &BuresObjective, candidates: Vec<ComplexMatrix>) -> Result<ComplexMatrix> {
    let mut best: Option<(f64, ComplexMatrix)> = None;
    for w in candidates {
        if !w.as_slice().iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            continue;
        }
        let norm = operator_norm(&w)?;
        let w = if norm > 1.0 { w.scale(1.0 / norm) } else { w };
        let value = obj.witness_value(&w);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, w));
        }
    }
    best.map(|(_, w)| w)
        .ok_or_else(|| Error::Degenerate("no finite witness candidate".into()))
}

/// ‖V1 − V2‖ for two dilations in the same representation.
pub fn bures_fixed_pair(v1: &Dilation, v2: &Dilation) -> Result<f64> {
    v1.distance(v2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phase(theta: f64) -> CpMap {
        CpMap::conjugation(&ComplexMatrix::diag(&[c64(1.0, 0.0), crate::numerics::C64::from_polar(1.0, theta)]))
            .unwrap()
    }

    #[test]
    fn equal_maps_are_at_distance_zero() {
        let t = crate::cpmaps::random_cp_map(2, 2, 2, 3).unwrap();
        let b = bures(&t, &t).unwrap();
        assert!(b.beta < 1e-6, "{}", b.beta);
        assert!(b.witness_distance < 1e-6);
        assert!(b.v1.distance(&b.v2).unwrap() < 1e-6);
    }

    #[test]
    fn orthogonal_unitaries() {
        let b = bures(&CpMap::identity(2), &phase(std::f64::consts::PI)).unwrap();
        assert!((b.beta - 2f64.sqrt()).abs() < 1e-6, "{}", b.beta);
        assert!((b.witness_distance - b.beta).abs() < 1e-5);
        assert!(b.dilation_residual < 1e-8);
    }

    #[test]
    fn quarter_phase() {
        let b = bures(&CpMap::identity(2), &phase(std::f64::consts::FRAC_PI_2)).unwrap();
        assert!((b.beta * b.beta - (2.0 - 2f64.sqrt())).abs() < 1e-5);
        assert!((b.witness_distance - b.beta).abs() < 1e-5);
    }

    #[test]
    fn zero_map_has_closed_form() {
        let t = crate::cpmaps::random_cp_map(2, 2, 2, 5).unwrap();
        let z = CpMap::zero(2, 2).unwrap();
        let b = bures(&t, &z).unwrap();
        assert!((b.beta * b.beta - t.norm()).abs() < 1e-9);
        assert!((b.witness_distance - b.beta).abs() < 1e-9);
        assert!(matches!(bures(&z, &z), Err(Error::Degenerate(_))));
    }

    #[test]
    fn witness_brackets_the_value() {
        for seed in 0..5 {
            let t1 = crate::cpmaps::random_cp_map(2, 2, 2, seed).unwrap();
            let t2 = crate::cpmaps::random_cp_map(2, 2, 3, seed + 100).unwrap();
            let b = bures(&t1, &t2).unwrap();
            assert!(b.upper_sq - b.lower_sq < 1e-6, "{} {}", b.upper_sq, b.lower_sq);
            assert!(b.upper_sq >= b.lower_sq - 1e-9);
            assert!(b.dilation_residual < 1e-8);
        }
    }
}
