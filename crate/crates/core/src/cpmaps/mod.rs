//! Completely positive maps T: M_d → M_n in the Heisenberg picture,
//! T(a) = Σ_i K_i† a K_i with d×n Kraus operators, and their Choi matrices
//! J(T) = Σ_ij E_ij ⊗ T(E_ij) (domain factor first).

mod random;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c64, eigh, ComplexMatrix, HermitianMatrix, PSD_CLIP};

pub use random::{haar_isometry, random_channel, random_cp_map, random_density, random_rng};
pub(crate) use random::gaussian_matrix;

/// Smallest Choi eigenvalue accepted as completely positive.
pub const CP_TOLERANCE: f64 = 1e-9;
/// Choi eigenvalues at or below this are treated as zero when extracting Kraus operators.
pub const KRAUS_CUTOFF: f64 = 1e-10;

/// J = Σ_ij E_ij ⊗ (Σ_k K_k† E_ij K_k), entry [(i,p),(j,q)] = Σ_k conj(K_k[i,p]) K_k[j,q].
pub fn choi_from_kraus(
    kraus: &[ComplexMatrix],
    d_in: usize,
    d_out: usize,
) -> Result<HermitianMatrix> {
    let side = d_in * d_out;
    let mut j = ComplexMatrix::zeros(side, side);
    for k in kraus {
        k.ensure_shape(d_in, d_out)?;
        k.ensure_finite()?;
        let flat = k.as_slice();
        for r in 0..side {
            let a = flat[r].conj();
            if a == c64(0.0, 0.0) {
                continue;
            }
            for c in 0..side {
                j[(r, c)] += a * flat[c];
            }
        }
    }
    Ok(HermitianMatrix::from_hermitian_part(&j))
}

/// Linearly independent Kraus family of the map with Choi matrix `j`, one
/// operator per eigenvalue above the cutoff, largest first.
pub fn kraus_from_choi(
    j: &HermitianMatrix,
    d_in: usize,
    d_out: usize,
) -> Result<Vec<ComplexMatrix>> {
    let side = d_in * d_out;
    if j.dim() != side {
        return Err(Error::Shape(format!(
            "Choi matrix of side {} for a map M_{d_in} -> M_{d_out}",
            j.dim()
        )));
    }
    let e = j.eigh();
    let min = e.values.first().copied().unwrap_or(0.0);
    if min < -CP_TOLERANCE {
        return Err(Error::NotCompletelyPositive {
            min_eigenvalue: min,
        });
    }
    let mut out = Vec::new();
    for k in (0..side).rev() {
        let lam = e.values[k];
        if lam <= KRAUS_CUTOFF {
            break;
        }
        let s = lam.sqrt();
        let v = e.vector(k);
        let data = v.iter().map(|x| (x * s).conj()).collect();
        out.push(ComplexMatrix::from_vec(d_in, d_out, data)?);
    }
    Ok(out)
}

/// Completely positive map with its Kraus list and cached Choi matrix.
#[derive(Clone, Debug)]
pub struct CpMap {
    d_in: usize,
    d_out: usize,
    kraus: Vec<ComplexMatrix>,
    choi: HermitianMatrix,
}

impl CpMap {
    pub fn from_kraus(d_in: usize, d_out: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::Dimension("map dimensions must be positive".into()));
        }
        let choi = choi_from_kraus(&kraus, d_in, d_out)?;
        Ok(Self {
            d_in,
            d_out,
            kraus,
            choi,
        })
    }

    pub fn from_choi(d_in: usize, d_out: usize, choi: HermitianMatrix) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::Dimension("map dimensions must be positive".into()));
        }
        let kraus = kraus_from_choi(&choi, d_in, d_out)?;
        let choi = choi_from_kraus(&kraus, d_in, d_out)?;
        Ok(Self {
            d_in,
            d_out,
            kraus,
            choi,
        })
    }

    /// a ↦ u† a u for a d×n matrix u.
    pub fn conjugation(u: &ComplexMatrix) -> Result<Self> {
        Self::from_kraus(u.rows(), u.cols(), vec![u.clone()])
    }

    pub fn identity(d: usize) -> Self {
        Self::conjugation(&ComplexMatrix::identity(d)).expect("identity channel")
    }

    pub fn zero(d_in: usize, d_out: usize) -> Result<Self> {
        Self::from_kraus(d_in, d_out, Vec::new())
    }

    /// a ↦ tr(a)/d · 1_n, with Kraus operators E_ij/√d.
    pub fn completely_depolarizing(d: usize, n: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        let kraus = (0..d)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| ComplexMatrix::unit(d, n, i, j).scale(s))
            .collect();
        Self::from_kraus(d, n, kraus).expect("depolarizing map")
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn choi(&self) -> &HermitianMatrix {
        &self.choi
    }

    /// Linearly independent Kraus family of minimal length.
    pub fn minimal_kraus(&self) -> Vec<ComplexMatrix> {
        kraus_from_choi(&self.choi, self.d_in, self.d_out).expect("cached Choi matrix is psd")
    }

    pub fn kraus_rank(&self) -> usize {
        self.choi
            .eigenvalues()
            .iter()
            .filter(|&&v| v > KRAUS_CUTOFF)
            .count()
    }

    pub fn is_zero(&self) -> bool {
        self.choi.max_abs() <= KRAUS_CUTOFF
    }

    /// Σ_i K_i† a K_i.
    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        a.ensure_shape(self.d_in, self.d_in)?;
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out += &k.adjoint_mul(&a.matmul(k));
        }
        Ok(out)
    }

    /// T(a) through the Choi matrix: Tr_d[J (aᵀ ⊗ 1_n)].
    pub fn apply_via_choi(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        apply_choi(&self.choi, self.d_in, self.d_out, a)
    }

    /// T(1_d) = Σ K_i† K_i.
    pub fn evaluate_at_identity(&self) -> HermitianMatrix {
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out += &k.adjoint_mul(k);
        }
        HermitianMatrix::from_hermitian_part(&out)
    }

    /// ‖T‖ = ‖T(1)‖.
    pub fn norm(&self) -> f64 {
        self.evaluate_at_identity().max_eigenvalue().max(0.0)
    }

    /// c·T for c ≥ 0.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::Dimension(format!(
                "scale factor {c} is not a nonnegative number"
            )));
        }
        let s = c.sqrt();
        Self::from_kraus(
            self.d_in,
            self.d_out,
            self.kraus.iter().map(|k| k.scale(s)).collect(),
        )
    }

    /// T1 + T2, with the Kraus lists concatenated.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.ensure_same_dims(other)?;
        let mut kraus = self.kraus.clone();
        kraus.extend(other.kraus.iter().cloned());
        Self::from_kraus(self.d_in, self.d_out, kraus)
    }

    pub fn ensure_same_dims(&self, other: &Self) -> Result<()> {
        if (self.d_in, self.d_out) != (other.d_in, other.d_out) {
            return Err(Error::Dimension(format!(
                "maps M_{} -> M_{} and M_{} -> M_{} are not comparable",
                self.d_in, self.d_out, other.d_in, other.d_out
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ChannelFile::from(self)).expect("channel serialization")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ChannelFile =
            serde_json::from_str(s).map_err(|e| Error::Shape(format!("channel JSON: {e}")))?;
        f.into_map()
    }
}

/// (S∘T)(a) = S(T(a)) for T: M_d → M_n and S: M_n → M_p; Kraus K_i L_j.
pub fn compose(s: &CpMap, t: &CpMap) -> Result<CpMap> {
    if t.d_out != s.d_in {
        return Err(Error::Dimension(format!(
            "cannot compose M_{} -> M_{} after M_{} -> M_{}",
            s.d_in, s.d_out, t.d_in, t.d_out
        )));
    }
    let mut kraus = Vec::with_capacity(s.kraus.len() * t.kraus.len());
    for k in &t.kraus {
        for l in &s.kraus {
            kraus.push(k.matmul(l));
        }
    }
    CpMap::from_kraus(t.d_in, s.d_out, kraus)
}

fn apply_choi(
    j: &ComplexMatrix,
    d_in: usize,
    d_out: usize,
    a: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    a.ensure_shape(d_in, d_in)?;
    let mut out = ComplexMatrix::zeros(d_out, d_out);
    for i in 0..d_in {
        for k in 0..d_in {
            let aik = a[(i, k)];
            if aik == c64(0.0, 0.0) {
                continue;
            }
            for p in 0..d_out {
                for q in 0..d_out {
                    out[(p, q)] += aik * j[(i * d_out + p, k * d_out + q)];
                }
            }
        }
    }
    Ok(out)
}

/// Hermiticity-preserving map given by a Hermitian (not necessarily psd) Choi matrix.
#[derive(Clone, Debug)]
pub struct HermMap {
    d_in: usize,
    d_out: usize,
    choi: HermitianMatrix,
}

impl HermMap {
    pub fn new(d_in: usize, d_out: usize, choi: HermitianMatrix) -> Result<Self> {
        if choi.dim() != d_in * d_out {
            return Err(Error::Shape(format!(
                "Choi matrix of side {} for a map M_{d_in} -> M_{d_out}",
                choi.dim()
            )));
        }
        Ok(Self { d_in, d_out, choi })
    }

    /// T1 − T2.
    pub fn difference(t1: &CpMap, t2: &CpMap) -> Result<Self> {
        t1.ensure_same_dims(t2)?;
        Self::new(t1.d_in, t1.d_out, t1.choi.sub(&t2.choi))
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &HermitianMatrix {
        &self.choi
    }

    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        apply_choi(&self.choi, self.d_in, self.d_out, a)
    }

    /// (cp?, minimum Choi eigenvalue).
    pub fn is_completely_positive(&self) -> (bool, f64) {
        let min = self.choi.min_eigenvalue();
        (min >= -CP_TOLERANCE, min)
    }
}

impl From<&CpMap> for HermMap {
    fn from(t: &CpMap) -> Self {
        Self {
            d_in: t.d_in,
            d_out: t.d_out,
            choi: t.choi.clone(),
        }
    }
}

/// Positive semidefinite matrix of unit trace.
#[derive(Clone, Debug, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(m: HermitianMatrix) -> Result<Self> {
        let min = m.min_eigenvalue();
        if min < -PSD_CLIP {
            return Err(Error::NotDensity(format!("minimum eigenvalue {min:.3e}")));
        }
        let tr = m.trace_re();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::NotDensity(format!("trace {tr}")));
        }
        Ok(Self(m))
    }

    /// Projects a psd-up-to-round-off matrix of positive trace onto the states:
    /// clips negative eigenvalues and renormalizes.
    pub fn normalized(m: &HermitianMatrix) -> Result<Self> {
        let clipped = m.map_spectrum(|v| v.max(0.0));
        let tr = clipped.trace_re();
        if !(tr > 0.0) {
            return Err(Error::NotDensity("zero trace".into()));
        }
        Ok(Self(clipped.scale(1.0 / tr)))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(HermitianMatrix::identity(n).scale(1.0 / n as f64))
    }

    /// |ψ⟩⟨ψ|/⟨ψ|ψ⟩.
    pub fn pure(psi: &[crate::numerics::C64]) -> Result<Self> {
        Self::normalized(&HermitianMatrix::outer(psi))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn into_inner(self) -> HermitianMatrix {
        self.0
    }
}

/// On-disk channel format: `{"d_in", "d_out", "kraus"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelFile {
    pub d_in: usize,
    pub d_out: usize,
    pub kraus: Vec<ComplexMatrix>,
}

impl ChannelFile {
    pub fn into_map(self) -> Result<CpMap> {
        CpMap::from_kraus(self.d_in, self.d_out, self.kraus)
    }
}

impl From<&CpMap> for ChannelFile {
    fn from(t: &CpMap) -> Self {
        Self {
            d_in: t.d_in,
            d_out: t.d_out,
            kraus: t.kraus.clone(),
        }
    }
}

/// Checks a cp map against a full eigendecomposition of its Choi matrix:
/// the smallest eigenvalue.
pub fn min_choi_eigenvalue(t: &CpMap) -> f64 {
    eigh(t.choi()).map(|e| e.values[0]).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c64, C64};

    fn basis(d: usize) -> Vec<ComplexMatrix> {
        (0..d)
            .flat_map(|i| (0..d).map(move |j| ComplexMatrix::unit(d, d, i, j)))
            .collect()
    }

    #[test]
    fn identity_channel_choi_is_maximally_entangled() {
        let t = CpMap::identity(3);
        let j = t.choi();
        assert!((j.trace_re() - 3.0).abs() < 1e-14);
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(j[(i * 3 + i, k * 3 + k)], c64(1.0, 0.0));
            }
        }
        assert_eq!(t.kraus_rank(), 1);
    }

    #[test]
    fn depolarizing_choi_is_scaled_identity() {
        let t = CpMap::completely_depolarizing(2, 3);
        let expected = ComplexMatrix::identity(6).scale(0.5);
        assert!((t.choi().as_matrix() - &expected).max_abs() < 1e-15);
        let a = ComplexMatrix::from_fn(2, 2, |i, j| c64((i + j) as f64, i as f64));
        let out = t.apply(&a).unwrap();
        let want = ComplexMatrix::identity(3).scale_c(a.trace() / 2.0);
        assert!((&out - &want).max_abs() < 1e-14);
    }

    #[test]
    fn kraus_roundtrip_for_identity_and_zero() {
        let t = CpMap::identity(2);
        let k = t.minimal_kraus();
        assert_eq!(k.len(), 1);
        let phase = k[0][(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        assert!((&k[0] - &ComplexMatrix::identity(2).scale_c(phase)).max_abs() < 1e-12);
        let z = kraus_from_choi(&HermitianMatrix::zeros(4), 2, 2).unwrap();
        assert!(z.is_empty());
    }

    #[test]
    fn transpose_map_is_not_cp() {
        // Choi of the transpose is the swap operator.
        let swap = ComplexMatrix::from_fn(4, 4, |r, c| {
            let (i, p) = (r / 2, r % 2);
            let (j, q) = (c / 2, c % 2);
            if i == q && p == j {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        });
        let f = HermMap::new(2, 2, HermitianMatrix::new(swap).unwrap()).unwrap();
        let (cp, min) = f.is_completely_positive();
        assert!(!cp);
        assert!((min + 1.0).abs() < 1e-12);
        let a = ComplexMatrix::from_fn(2, 2, |i, j| c64(i as f64, j as f64 + 1.0));
        assert!((&f.apply(&a).unwrap() - &a.transpose()).max_abs() < 1e-14);
    }

    #[test]
    fn kraus_and_choi_routes_agree() {
        let t = random_cp_map(2, 3, 2, 11).unwrap();
        for a in basis(2) {
            let x = t.apply(&a).unwrap();
            let y = t.apply_via_choi(&a).unwrap();
            assert!((&x - &y).max_abs() < 1e-12);
        }
        assert!(
            (t.evaluate_at_identity().as_matrix() - &t.apply(&ComplexMatrix::identity(2)).unwrap())
                .max_abs()
                < 1e-12
        );
    }

    #[test]
    fn compose_matches_double_apply() {
        let t = random_channel(2, 3, 2, 5).unwrap();
        let s = random_channel(3, 2, 2, 6).unwrap();
        let st = compose(&s, &t).unwrap();
        assert_eq!((st.d_in(), st.d_out()), (2, 2));
        for a in basis(2) {
            let want = s.apply(&t.apply(&a).unwrap()).unwrap();
            assert!((&st.apply(&a).unwrap() - &want).max_abs() < 1e-12);
        }
        assert!(compose(&t, &t).is_err());
    }

    #[test]
    fn compose_unitary_conjugations() {
        let h = 0.5f64.sqrt();
        let u = ComplexMatrix::from_vec(
            2,
            2,
            vec![c64(h, 0.0), c64(h, 0.0), c64(h, 0.0), c64(-h, 0.0)],
        )
        .unwrap();
        let w = ComplexMatrix::diag(&[c64(1.0, 0.0), C64::from_polar(1.0, 0.7)]);
        let tu = CpMap::conjugation(&u).unwrap();
        let tw = CpMap::conjugation(&w).unwrap();
        let direct = CpMap::conjugation(&u.matmul(&w)).unwrap();
        let composed = compose(&tw, &tu).unwrap();
        assert!((composed.choi().as_matrix() - direct.choi().as_matrix()).max_abs() < 1e-14);
    }

    #[test]
    fn channel_json_roundtrip() {
        let t = random_channel(2, 2, 2, 3).unwrap();
        let back = CpMap::from_json(&t.to_json()).unwrap();
        assert_eq!(back.kraus(), t.kraus());
        let bad = r#"{"d_in":2,"d_out":2,"kraus":[[[[1.0,0.0]]]]}"#;
        assert!(CpMap::from_json(bad).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(HermitianMatrix::diag(&[0.5, 0.5])).is_ok());
        assert!(DensityMatrix::new(HermitianMatrix::diag(&[1.0, 0.5])).is_err());
        assert!(DensityMatrix::new(HermitianMatrix::diag(&[1.5, -0.5])).is_err());
        let p = DensityMatrix::pure(&[c64(1.0, 0.0), c64(0.0, 1.0)]).unwrap();
        assert!((p.matrix().trace_re() - 1.0).abs() < 1e-15);
    }
}
