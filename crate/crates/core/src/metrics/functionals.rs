use serde::Serialize;

use crate::cpmaps::CpMap;
use crate::error::{Error, Result};
use crate::numerics::{
    operator_norm, psd_inv_sqrt, psd_sqrt, spectral_projector, trace_norm, ComplexMatrix,
    HermitianMatrix,
};

/// Eigenvalue cutoff defining the support of a density.
pub const SUPPORT_CUTOFF: f64 = 1e-10;

/// ω(a) = tr(ρa) for a psd ρ of any trace.
#[derive(Clone, Debug, Serialize)]
pub struct PositiveFunctional {
    rho: HermitianMatrix,
}

impl PositiveFunctional {
    pub fn new(rho: HermitianMatrix) -> Result<Self> {
        rho.ensure_finite()?;
        let min = rho.min_eigenvalue();
        if min < -1e-10 {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        Ok(Self { rho })
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn rho(&self) -> &HermitianMatrix {
        &self.rho
    }

    pub fn evaluate(&self, a: &ComplexMatrix) -> f64 {
        self.rho.trace_product(a).re
    }

    /// ‖ω‖ = ω(1).
    pub fn norm(&self) -> f64 {
        self.rho.trace_re()
    }

    /// (1 − s)·self + s·other.
    pub fn mix(&self, other: &Self, s: f64) -> Result<Self> {
        self.ensure_same_dim(other)?;
        Self::new(self.rho.scale(1.0 - s).add(&other.rho.scale(s)))
    }

    /// ‖ω0 − ω1‖ = ‖ρ0 − ρ1‖₁.
    pub fn distance_norm(&self, other: &Self) -> Result<f64> {
        self.ensure_same_dim(other)?;
        trace_norm(self.rho.sub(&other.rho).as_matrix())
    }

    /// ω as a cp map M_d → M_1 = C: K_k = √λ_k v_k over the spectrum of ρ.
    pub fn to_cp_map(&self) -> Result<CpMap> {
        let d = self.dim();
        let e = self.rho.eigh();
        let kraus = (0..d)
            .filter(|&k| e.values[k] > 0.0)
            .map(|k| {
                let v = e.vector(k);
                ComplexMatrix::from_fn(d, 1, |i, _| v[i] * e.values[k].sqrt())
            })
            .collect();
        CpMap::from_kraus(d, 1, kraus)
    }

    fn ensure_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "functionals on M_{} and M_{}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

/// F(ω0, ω1) = ‖√ρ0 √ρ1‖₁.
pub fn fidelity(w0: &PositiveFunctional, w1: &PositiveFunctional) -> Result<f64> {
    w0.ensure_same_dim(w1)?;
    let a = psd_sqrt(&w0.rho)?;
    let b = psd_sqrt(&w1.rho)?;
    trace_norm(&a.matmul(&b))
}

/// β(ω0, ω1) = √(ω0(1) + ω1(1) − 2F).
pub fn bures_states(w0: &PositiveFunctional, w1: &PositiveFunctional) -> Result<f64> {
    let f = fidelity(w0, w1)?;
    Ok((w0.norm() + w1.norm() - 2.0 * f).max(0.0).sqrt())
}

/// h = ρ0^{-1/2} (ρ0^{1/2} ρ1 ρ0^{1/2})^{1/2} ρ0^{-1/2} on the support of ρ0,
/// so that ω1(a) = ω0(h a h). Requires supp ρ1 ⊆ supp ρ0.
pub fn radon_nikodym_operator(
    w0: &PositiveFunctional,
    w1: &PositiveFunctional,
) -> Result<HermitianMatrix> {
    w0.ensure_same_dim(w1)?;
    let kernel = spectral_projector(&w0.rho, f64::NEG_INFINITY, SUPPORT_CUTOFF);
    let leak = operator_norm(w1.rho.congruence(kernel.as_matrix()).as_matrix())?;
    if leak > SUPPORT_CUTOFF {
        return Err(Error::Dominance { leak });
    }
    let r = psd_sqrt(&w0.rho)?;
    let r_inv = psd_inv_sqrt(&w0.rho, SUPPORT_CUTOFF)?;
    let inner = psd_sqrt(&HermitianMatrix::from_hermitian_part(
        &r.matmul(&w1.rho.matmul(&r)),
    ))?;
    Ok(HermitianMatrix::from_hermitian_part(
        &r_inv.matmul(&inner.matmul(&r_inv)),
    ))
}

/// The chain β²(ω0, ω1) ≤ ω0((1 − h)²) ≤ (ω0 − ω1)(2p − 1) ≤ ‖ω0 − ω1‖
/// for a dominated pair, with p the spectral projector of h on [0, 1].
#[derive(Clone, Debug, Serialize)]
pub struct AppendixBRecord {
    pub beta_sq: f64,
    /// ω0((1 − h)²).
    pub beta_sq_bound: f64,
    /// tr((ρ0 − ρ1)(2p − 1)).
    pub reflection_value: f64,
    /// ‖ρ0 − ρ1‖₁.
    pub norm_diff: f64,
    /// ‖hρ0h − ρ1‖.
    pub defect: f64,
    /// The three successive differences of the chain.
    pub slacks: [f64; 3],
}

impl AppendixBRecord {
    pub fn min_slack(&self) -> f64 {
        self.slacks.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn appendix_b_certificate(
    w0: &PositiveFunctional,
    w1: &PositiveFunctional,
) -> Result<AppendixBRecord> {
    let h = radon_nikodym_operator(w0, w1)?;
    let d = w0.dim();
    let defect = operator_norm(&(h.matmul(&w0.rho.matmul(&h)) - w1.rho.as_matrix().clone()))?;
    let beta = bures_states(w0, w1)?;
    let beta_sq = beta * beta;
    let one_minus_h = &ComplexMatrix::identity(d) - h.as_matrix();
    let beta_sq_bound = w0.evaluate(&one_minus_h.matmul(&one_minus_h));
    let p = spectral_projector(&h, 0.0, 1.0);
    let reflection = &p.as_matrix().scale(2.0) - &ComplexMatrix::identity(d);
    let diff = w0.rho.sub(&w1.rho);
    let reflection_value = diff.trace_product(&reflection).re;
    let norm_diff = trace_norm(diff.as_matrix())?;
    Ok(AppendixBRecord {
        beta_sq,
        beta_sq_bound,
        reflection_value,
        norm_diff,
        defect,
        slacks: [
            beta_sq_bound - beta_sq,
            reflection_value - beta_sq_bound,
            norm_diff - reflection_value,
        ],
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MixtureEntry {
    pub s: f64,
    /// |β(ω0, ω1) − β((1 − s)ω0 + sω1, ω1)|.
    pub lhs: f64,
    /// √s (√‖ω0‖ + √‖ω1‖).
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MixtureRecord {
    pub entries: Vec<MixtureEntry>,
}

impl MixtureRecord {
    pub fn min_slack(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.slack)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn mixture_certificate(
    w0: &PositiveFunctional,
    w1: &PositiveFunctional,
    s_grid: &[f64],
) -> Result<MixtureRecord> {
    let base = bures_states(w0, w1)?;
    let scale = w0.norm().max(0.0).sqrt() + w1.norm().max(0.0).sqrt();
    let mut entries = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Dimension(format!("mixing weight {s} outside [0, 1]")));
        }
        let mixed = w0.mix(w1, s)?;
        let lhs = (base - bures_states(&mixed, w1)?).abs();
        let rhs = s.sqrt() * scale;
        entries.push(MixtureEntry {
            s,
            lhs,
            rhs,
            slack: rhs - lhs,
        });
    }
    Ok(MixtureRecord { entries })
}
