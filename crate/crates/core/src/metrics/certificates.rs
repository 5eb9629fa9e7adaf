use std::collections::BTreeMap;

use serde::Serialize;

use super::bures::bures;
use super::cb::cb_norm;
use super::extension::bures_extension;
use super::Tolerances;
use crate::cpmaps::{compose, CpMap, HermMap};
use crate::dilations::triangle_dilations;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Dims {
    pub d: usize,
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
}

/// The sandwich L ≤ β ≤ U with
///
///   L = ‖T1 − T2‖_cb / (√‖T1(1)‖ + √‖T2(1)‖),   U = √‖T1 − T2‖_cb,
///
/// the witness identity ‖V1 − V2‖ = β and the agreement of β with its
/// extension form. Each slack is a margin that must be ≥ −tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct MetricReport {
    pub beta: f64,
    pub beta_ext: f64,
    pub cb_diff: f64,
    pub lower: f64,
    pub upper: f64,
    /// |‖V1 − V2‖ − β|.
    pub witness_gap: f64,
    pub slacks: BTreeMap<String, f64>,
    pub seed: u64,
    pub dims: Dims,
    /// Names of the slacks below their tolerance.
    pub violations: Vec<String>,
}

impl MetricReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst_slack(&self) -> f64 {
        self.slacks.values().copied().fold(f64::INFINITY, f64::min)
    }
}

fn violations(slacks: &BTreeMap<String, f64>, tol: &dyn Fn(&str) -> f64) -> Vec<String> {
    slacks
        .iter()
        .filter(|(k, v)| !(**v >= -tol(k)))
        .map(|(k, _)| k.clone())
        .collect()
}

pub fn theorem1_certificate(
    t1: &CpMap,
    t2: &CpMap,
    tol: &Tolerances,
    seed: u64,
) -> Result<MetricReport> {
    t1.ensure_same_dims(t2)?;
    if t1.is_zero() && t2.is_zero() {
        return Err(Error::Degenerate("both maps are zero".into()));
    }
    let cb = cb_norm(&HermMap::difference(t1, t2)?)?;
    let w = bures(t1, t2)?;
    let ext = bures_extension(t1, t2)?;
    let cb_diff = cb.value;
    let denominator = t1.norm().sqrt() + t2.norm().sqrt();
    let lower = cb_diff / denominator;
    let upper = cb_diff.sqrt();
    let witness_gap = (w.witness_distance - w.beta).abs();

    let mut slacks = BTreeMap::new();
    slacks.insert("lower".to_string(), w.beta - lower);
    slacks.insert("upper".to_string(), upper - w.beta);
    slacks.insert("witness".to_string(), -witness_gap);
    slacks.insert("dilation".to_string(), -w.dilation_residual);
    slacks.insert("consistency".to_string(), -(w.beta - ext.beta_ext).abs());
    let tolerance = |k: &str| match k {
        "lower" | "upper" => tol.sandwich,
        "witness" => tol.witness,
        "dilation" => tol.dilation,
        _ => tol.consistency,
    };
    let violations = violations(&slacks, &tolerance);
    Ok(MetricReport {
        beta: w.beta,
        beta_ext: ext.beta_ext,
        cb_diff,
        lower,
        upper,
        witness_gap,
        slacks,
        seed,
        dims: Dims {
            d: t1.d_in(),
            n: t1.d_out(),
            m1: t1.kraus_rank(),
            m2: t2.kraus_rank(),
        },
        violations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// S after T_i.
    Post,
    /// S before T_i.
    Pre,
}

/// β(S∘T1, S∘T2) ≤ √‖S(1)‖ β(T1, T2) (post) or β(T1∘S, T2∘S) ≤ √‖S(1)‖ β(T1, T2) (pre).
#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityRecord {
    pub side: Side,
    pub beta: f64,
    pub beta_composed: f64,
    pub norm_s: f64,
    pub slack: f64,
    pub passed: bool,
}

pub fn monotonicity_certificate(
    s: &CpMap,
    t1: &CpMap,
    t2: &CpMap,
    side: Side,
    tol: &Tolerances,
) -> Result<MonotonicityRecord> {
    t1.ensure_same_dims(t2)?;
    let (c1, c2) = match side {
        Side::Post => (compose(s, t1)?, compose(s, t2)?),
        Side::Pre => (compose(t1, s)?, compose(t2, s)?),
    };
    let beta = bures(t1, t2)?.beta;
    let beta_composed = if c1.is_zero() && c2.is_zero() {
        0.0
    } else {
        bures(&c1, &c2)?.beta
    };
    let norm_s = s.norm();
    let slack = norm_s.sqrt() * beta - beta_composed;
    Ok(MonotonicityRecord {
        side,
        beta,
        beta_composed,
        norm_s,
        slack,
        passed: slack >= -tol.monotonicity,
    })
}

/// β13 ≤ β12 + β23 together with the constructive dilations Ṽ1, Ṽ2, Ṽ3 in
/// one representation.
#[derive(Clone, Debug, Serialize)]
pub struct TriangleRecord {
    pub beta12: f64,
    pub beta23: f64,
    pub beta13: f64,
    /// ‖Ṽ1 − Ṽ3‖, an upper bound on β13.
    pub constructed13: f64,
    /// β12 + β23 − β13.
    pub slack: f64,
    /// ‖Ṽ1 − Ṽ3‖ − β13.
    pub constructed_slack: f64,
    pub overlap_residual: f64,
    pub dilation_residual: f64,
    pub passed: bool,
}

pub fn triangle_certificate(
    t1: &CpMap,
    t2: &CpMap,
    t3: &CpMap,
    tol: &Tolerances,
) -> Result<TriangleRecord> {
    let b12 = bures(t1, t2)?;
    let b23 = bures(t2, t3)?;
    let b13 = bures(t1, t3)?;
    let tri = triangle_dilations(t1, t2, t3, (&b12.v1, &b12.v2), (&b23.v1, &b23.v2))?;
    let constructed13 = tri.v1.distance(&tri.v3)?;
    let slack = b12.beta + b23.beta - b13.beta;
    let constructed_slack = constructed13 - b13.beta;
    let overlap_residual = tri.overlap12_residual.max(tri.overlap23_residual);
    let passed = slack >= -tol.triangle
        && constructed_slack >= -tol.triangle
        && overlap_residual <= tol.overlap
        && tri.dilation_residual <= tol.dilation;
    Ok(TriangleRecord {
        beta12: b12.beta,
        beta23: b23.beta,
        beta13: b13.beta,
        constructed13,
        slack,
        constructed_slack,
        overlap_residual,
        dilation_residual: tri.dilation_residual,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyRecord {
    pub beta: f64,
    pub beta_ext: f64,
    pub difference: f64,
    pub passed: bool,
}

pub fn consistency_certificate(t1: &CpMap, t2: &CpMap, tol: &Tolerances) -> Result<ConsistencyRecord> {
    let beta = bures(t1, t2)?.beta;
    let beta_ext = bures_extension(t1, t2)?.beta_ext;
    let difference = (beta - beta_ext).abs();
    Ok(ConsistencyRecord {
        beta,
        beta_ext,
        difference,
        passed: difference <= tol.consistency,
    })
}
