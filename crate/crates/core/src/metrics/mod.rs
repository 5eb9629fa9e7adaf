//! Distances between cp maps and the certificates relating them.

pub mod bures;
pub mod cb;
pub mod certificates;
pub mod extension;
pub mod functionals;

use serde::Serialize;

pub use bures::{bures, bures_fixed_pair, BuresObjective, BuresWitness, FrankWolfe};
pub use cb::{cb_norm, CbNorm};
pub use certificates::{
    consistency_certificate, monotonicity_certificate, theorem1_certificate, triangle_certificate,
    ConsistencyRecord, MetricReport, MonotonicityRecord, Side, TriangleRecord,
};
pub use extension::{bures_extension, CpExtension, ExtensionResult};
pub use functionals::{
    appendix_b_certificate, bures_states, fidelity, mixture_certificate, radon_nikodym_operator,
    AppendixBRecord, MixtureRecord, PositiveFunctional,
};

/// Slack tolerances used by the certificates. Every check is of the form
/// `slack >= -tolerance`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// L ≤ β ≤ U.
    pub sandwich: f64,
    /// |‖V1 − V2‖ − β|.
    pub witness: f64,
    /// Residual of a dilation against its map.
    pub dilation: f64,
    /// |β − β_ext|.
    pub consistency: f64,
    pub triangle: f64,
    /// Overlap identities of the triangle construction.
    pub overlap: f64,
    pub monotonicity: f64,
    pub mixture: f64,
    /// Reflection chain and the state-level norm bound.
    pub appendix_b: f64,
    /// ‖hρ0h − ρ1‖.
    pub radon_nikodym: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sandwich: 1e-5,
            witness: 1e-5,
            dilation: 1e-8,
            consistency: 1e-4,
            triangle: 1e-5,
            overlap: 1e-8,
            monotonicity: 1e-5,
            mixture: 1e-8,
            appendix_b: 1e-8,
            radon_nikodym: 1e-9,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 10] = [
        "sandwich",
        "witness",
        "dilation",
        "consistency",
        "triangle",
        "overlap",
        "monotonicity",
        "mixture",
        "appendix_b",
        "radon_nikodym",
    ];

    /// Mutable access by name, for command-line overrides.
    pub fn get_mut(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "sandwich" => &mut self.sandwich,
            "witness" => &mut self.witness,
            "dilation" => &mut self.dilation,
            "consistency" => &mut self.consistency,
            "triangle" => &mut self.triangle,
            "overlap" => &mut self.overlap,
            "monotonicity" => &mut self.monotonicity,
            "mixture" => &mut self.mixture,
            "appendix_b" => &mut self.appendix_b,
            "radon_nikodym" => &mut self.radon_nikodym,
            _ => return None,
        })
    }
}
