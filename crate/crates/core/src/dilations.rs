//! Stinespring dilations in the canonical representation π_m(a) = a ⊗ 1_m.
//!
//! A dilation of T: M_d → M_n is an operator V: C^n → C^d ⊗ C^m with
//! T(a) = V† (a ⊗ 1_m) V. Row a·m + i of V is row a of the i-th Kraus
//! operator, so V ψ = Σ_i (K_i ψ) ⊗ e_i.

use serde::{Deserialize, Serialize};

use crate::cpmaps::CpMap;
use crate::error::{Error, Result};
use crate::numerics::{c64, operator_norm, psd_sqrt, ComplexMatrix, HermitianMatrix, C64};

/// Accepted residual of the dilation property.
pub const DILATION_TOLERANCE: f64 = 1e-8;
/// Accepted residual of the least-squares intertwiner solve.
pub const INTERTWINER_TOLERANCE: f64 = 1e-6;
/// Slack allowed on ‖w‖ ≤ 1.
pub const CONTRACTION_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DilationFile", into = "DilationFile")]
pub struct Dilation {
    d: usize,
    n: usize,
    m: usize,
    v: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct DilationFile {
    d: usize,
    n: usize,
    m: usize,
    #[serde(rename = "V")]
    v: ComplexMatrix,
}

impl TryFrom<DilationFile> for Dilation {
    type Error = Error;

    fn try_from(f: DilationFile) -> Result<Self> {
        Dilation::new(f.d, f.n, f.m, f.v)
    }
}

impl From<Dilation> for DilationFile {
    fn from(d: Dilation) -> Self {
        Self {
            d: d.d,
            n: d.n,
            m: d.m,
            v: d.v,
        }
    }
}

impl Dilation {
    pub fn new(d: usize, n: usize, m: usize, v: ComplexMatrix) -> Result<Self> {
        // A 0×0 matrix stands for the empty operator when m = 0.
        let v = if m == 0 && v.rows() == 0 {
            ComplexMatrix::zeros(0, n)
        } else {
            v
        };
        v.ensure_shape(d * m, n)?;
        v.ensure_finite()?;
        Ok(Self { d, n, m, v })
    }

    /// Stacks Kraus operators K_i (d×n) into V.
    pub fn from_kraus(d: usize, n: usize, kraus: &[ComplexMatrix]) -> Result<Self> {
        let m = kraus.len();
        for k in kraus {
            k.ensure_shape(d, n)?;
        }
        let v = ComplexMatrix::from_fn(d * m, n, |r, c| kraus[r % m][(r / m, c)]);
        Self::new(d, n, m, v)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn v(&self) -> &ComplexMatrix {
        &self.v
    }

    pub fn kraus(&self) -> Vec<ComplexMatrix> {
        (0..self.m)
            .map(|i| ComplexMatrix::from_fn(self.d, self.n, |a, c| self.v[(a * self.m + i, c)]))
            .collect()
    }

    /// The dilated map a ↦ V†(a ⊗ 1)V.
    pub fn map(&self) -> Result<CpMap> {
        CpMap::from_kraus(self.d, self.n, self.kraus())
    }

    /// V†(a ⊗ 1_m)V.
    pub fn compress(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        a.ensure_shape(self.d, self.d)?;
        let big = a.kron(&ComplexMatrix::identity(self.m));
        Ok(self.v.adjoint_mul(&big.matmul(&self.v)))
    }

    /// V† V = T(1).
    pub fn gram(&self) -> HermitianMatrix {
        HermitianMatrix::from_hermitian_part(&self.v.adjoint_mul(&self.v))
    }

    /// The same operator in multiplicity m + extra, padded with zero slices.
    pub fn zero_padded(&self, extra: usize) -> Self {
        let mut k = self.kraus();
        k.extend((0..extra).map(|_| ComplexMatrix::zeros(self.d, self.n)));
        Self::from_kraus(self.d, self.n, &k).expect("padding keeps shapes")
    }

    /// (1_d ⊗ u) V for a k×m matrix u; slices K'_j = Σ_i u_ji K_i.
    pub fn gauge(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.cols() != self.m {
            return Err(Error::Shape(format!(
                "gauge with {} columns on multiplicity {}",
                u.cols(),
                self.m
            )));
        }
        let k = self.kraus();
        let slices = mix_slices(u, &k, self.d, self.n);
        Self::from_kraus(self.d, self.n, &slices)
    }

    pub fn ensure_compatible(&self, other: &Self) -> Result<()> {
        if (self.d, self.n, self.m) != (other.d, other.n, other.m) {
            return Err(Error::Shape(format!(
                "dilations (d={}, n={}, m={}) and (d={}, n={}, m={}) differ",
                self.d, self.n, self.m, other.d, other.n, other.m
            )));
        }
        Ok(())
    }

    /// ‖V1 − V2‖.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.ensure_compatible(other)?;
        if self.m == 0 {
            return Ok(0.0);
        }
        operator_norm(&(&self.v - &other.v))
    }

    /// V1† V2 (n×n).
    pub fn overlap(&self, other: &Self) -> Result<ComplexMatrix> {
        self.ensure_compatible(other)?;
        Ok(self.v.adjoint_mul(&other.v))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dilation serialization")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Shape(format!("dilation JSON: {e}")))
    }
}

/// Σ_i u_ji K_i for each row j of u.
fn mix_slices(u: &ComplexMatrix, k: &[ComplexMatrix], d: usize, n: usize) -> Vec<ComplexMatrix> {
    (0..u.rows())
        .map(|j| {
            let mut s = ComplexMatrix::zeros(d, n);
            for (i, ki) in k.iter().enumerate() {
                let c = u[(j, i)];
                if c != c64(0.0, 0.0) {
                    s += &ki.scale_c(c);
                }
            }
            s
        })
        .collect()
}

/// Dilation in multiplicity equal to the Kraus rank, built from the
/// Choi eigendecomposition. The zero map gives m = 0.
pub fn minimal_dilation(t: &CpMap) -> Dilation {
    Dilation::from_kraus(t.d_in(), t.d_out(), &t.minimal_kraus()).expect("minimal Kraus shapes")
}

/// max over matrix units E_ij of ‖V†(E_ij ⊗ 1)V − T(E_ij)‖.
pub fn verify_dilation(dil: &Dilation, t: &CpMap) -> Result<f64> {
    if (dil.d, dil.n) != (t.d_in(), t.d_out()) {
        return Err(Error::Shape(format!(
            "dilation of M_{} -> M_{} checked against M_{} -> M_{}",
            dil.d,
            dil.n,
            t.d_in(),
            t.d_out()
        )));
    }
    let ks = dil.kraus();
    let mut worst = 0.0f64;
    for i in 0..dil.d {
        for j in 0..dil.d {
            // (K† E_ij K)[p, q] = conj(K[i, p]) K[j, q].
            let mut diff = ComplexMatrix::zeros(dil.n, dil.n);
            for k in &ks {
                for p in 0..dil.n {
                    for q in 0..dil.n {
                        diff[(p, q)] += k[(i, p)].conj() * k[(j, q)];
                    }
                }
            }
            for k in t.kraus() {
                for p in 0..dil.n {
                    for q in 0..dil.n {
                        diff[(p, q)] -= k[(i, p)].conj() * k[(j, q)];
                    }
                }
            }
            worst = worst.max(operator_norm(&diff)?);
        }
    }
    Ok(worst)
}

/// Isometry u (m × m̂) with (1_d ⊗ u) V̂ = V, for a minimal dilation V̂ and
/// any dilation V of the same map. Solves K_j = Σ_i u_ji K̂_i in the least
/// squares sense over the linearly independent family K̂.
pub fn intertwiner_from_minimal(minimal: &Dilation, dil: &Dilation) -> Result<ComplexMatrix> {
    if (minimal.d, minimal.n) != (dil.d, dil.n) {
        return Err(Error::Shape(
            "dilations of maps with different dimensions".into(),
        ));
    }
    let kh = minimal.kraus();
    let k = dil.kraus();
    let mh = kh.len();
    let gram = HermitianMatrix::from_hermitian_part(&ComplexMatrix::from_fn(mh, mh, |a, b| {
        kh[a].inner(&kh[b])
    }));
    let e = gram.eigh();
    let top = e.values.last().copied().unwrap_or(0.0);
    let cutoff = 1e-12 * top.max(1e-300);
    let inv: Vec<f64> = e
        .values
        .iter()
        .map(|&x| if x > cutoff { 1.0 / x } else { 0.0 })
        .collect();
    let pinv = e.reassemble(&inv);

    let mut u = ComplexMatrix::zeros(k.len(), mh);
    let mut residual = 0.0f64;
    for (j, kj) in k.iter().enumerate() {
        // G (u_j)ᵀ = b_j with b_j[c] = ⟨K̂_c, K_j⟩ and G_ca = ⟨K̂_c, K̂_a⟩.
        let b: Vec<C64> = kh.iter().map(|h| h.inner(kj)).collect();
        for a in 0..mh {
            u[(j, a)] = (0..mh).map(|c| pinv[(a, c)] * b[c]).sum();
        }
        let mut approx = ComplexMatrix::zeros(dil.d, dil.n);
        for (a, h) in kh.iter().enumerate() {
            approx += &h.scale_c(u[(j, a)]);
        }
        residual = residual.max((kj - &approx).frobenius_norm());
    }
    let scale = 1.0 + minimal.v.frobenius_norm();
    if residual > INTERTWINER_TOLERANCE * scale {
        return Err(Error::NotSameMap { residual });
    }
    Ok(u)
}

/// Operator w: C^{m2} → C^{m1} with ‖w‖ ≤ 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    w: ComplexMatrix,
}

impl Contraction {
    pub fn new(w: ComplexMatrix) -> Result<Self> {
        w.ensure_finite()?;
        let norm = if w.rows() == 0 || w.cols() == 0 {
            0.0
        } else {
            operator_norm(&w)?
        };
        if norm > 1.0 + CONTRACTION_TOLERANCE {
            return Err(Error::ContractionViolation { norm });
        }
        Ok(Self { w })
    }

    pub fn zero(m1: usize, m2: usize) -> Self {
        Self {
            w: ComplexMatrix::zeros(m1, m2),
        }
    }

    pub fn m1(&self) -> usize {
        self.w.rows()
    }

    pub fn m2(&self) -> usize {
        self.w.cols()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.w
    }
}

/// Common-representation dilations in multiplicity m1 + m2 built from the
/// minimal dilations V̂1, V̂2 and a contraction w:
///
///   V1 = V̂1 ⊕ 0,   V2 = (1⊗w)V̂2 ⊕ √(1 − (1⊗w)†(1⊗w)) V̂2,
///
/// so that V1†V2 = V̂1†(1⊗w)V̂2.
pub fn common_pair_from_contraction(
    t1: &CpMap,
    t2: &CpMap,
    w: &Contraction,
) -> Result<(Dilation, Dilation)> {
    t1.ensure_same_dims(t2)?;
    common_pair_from_kraus(
        t1.d_in(),
        t1.d_out(),
        &t1.minimal_kraus(),
        &t2.minimal_kraus(),
        w,
    )
}

/// As [`common_pair_from_contraction`], with the minimal Kraus families given.
pub fn common_pair_from_kraus(
    d: usize,
    n: usize,
    k1: &[ComplexMatrix],
    k2: &[ComplexMatrix],
    w: &Contraction,
) -> Result<(Dilation, Dilation)> {
    let (m1, m2) = (k1.len(), k2.len());
    if (w.m1(), w.m2()) != (m1, m2) {
        return Err(Error::Shape(format!(
            "contraction is {}x{} but the minimal multiplicities are {m1} and {m2}",
            w.m1(),
            w.m2()
        )));
    }
    let wm = w.matrix();
    let defect =
        HermitianMatrix::from_hermitian_part(&(&ComplexMatrix::identity(m2) - &wm.adjoint_mul(wm)));
    let s = psd_sqrt(&defect)?;

    let mut s1: Vec<ComplexMatrix> = k1.to_vec();
    s1.extend((0..m2).map(|_| ComplexMatrix::zeros(d, n)));
    let mut s2 = mix_slices(wm, k2, d, n);
    s2.extend(mix_slices(s.as_matrix(), k2, d, n));
    Ok((
        Dilation::from_kraus(d, n, &s1)?,
        Dilation::from_kraus(d, n, &s2)?,
    ))
}

/// Dilations Ṽ1, Ṽ2, Ṽ3 of T1, T2, T3 in one representation of
/// multiplicity m̂1 + m̂2 + m̂3, built from a common pair (V1, V2) of
/// (T1, T2) and a common pair (V̌2, V̌3) of (T2, T3):
///
///   Ṽ1 = (√(1 − u1†u2u2†u1) V̂1, u2†V1, 0),
///   Ṽ2 = (0, V̂2, 0),
///   Ṽ3 = (0, ǔ2†V̌3, √(1 − ǔ3†ǔ2ǔ2†ǔ3) V̂3),
///
/// with u_i the intertwiners from the minimal dilations V̂_i.
#[derive(Clone, Debug)]
pub struct TriangleDilations {
    pub v1: Dilation,
    pub v2: Dilation,
    pub v3: Dilation,
    /// ‖Ṽ2†Ṽ1 − V2†V1‖.
    pub overlap12_residual: f64,
    /// ‖Ṽ2†Ṽ3 − V̌2†V̌3‖.
    pub overlap23_residual: f64,
    /// Largest dilation residual of Ṽ1, Ṽ2, Ṽ3.
    pub dilation_residual: f64,
}

pub fn triangle_dilations(
    t1: &CpMap,
    t2: &CpMap,
    t3: &CpMap,
    pair12: (&Dilation, &Dilation),
    pair23: (&Dilation, &Dilation),
) -> Result<TriangleDilations> {
    t1.ensure_same_dims(t2)?;
    t1.ensure_same_dims(t3)?;
    let (d, n) = (t1.d_in(), t1.d_out());
    let (v1, v2) = pair12;
    let (cv2, cv3) = pair23;
    v1.ensure_compatible(v2)?;
    cv2.ensure_compatible(cv3)?;
    for (dil, t) in [(v1, t1), (v2, t2), (cv2, t2), (cv3, t3)] {
        let residual = verify_dilation(dil, t)?;
        if residual > DILATION_TOLERANCE {
            return Err(Error::InvalidDilation { residual });
        }
    }

    let h1 = minimal_dilation(t1);
    let h2 = minimal_dilation(t2);
    let h3 = minimal_dilation(t3);
    let u1 = intertwiner_from_minimal(&h1, v1)?;
    let u2 = intertwiner_from_minimal(&h2, v2)?;
    let cu2 = intertwiner_from_minimal(&h2, cv2)?;
    let cu3 = intertwiner_from_minimal(&h3, cv3)?;
    let (m1, m3) = (h1.m(), h3.m());

    let defect = |a: &ComplexMatrix, b: &ComplexMatrix, k: usize| -> Result<HermitianMatrix> {
        // √(1 − a†b b†a)
        let bta = b.adjoint_mul(a);
        let x = &ComplexMatrix::identity(k) - &bta.adjoint_mul(&bta);
        psd_sqrt(&HermitianMatrix::from_hermitian_part(&x))
    };
    let zeros =
        |k: usize| -> Vec<ComplexMatrix> { (0..k).map(|_| ComplexMatrix::zeros(d, n)).collect() };

    let mut s1 = mix_slices(defect(&u1, &u2, m1)?.as_matrix(), &h1.kraus(), d, n);
    s1.extend(mix_slices(&u2.adjoint(), &v1.kraus(), d, n));
    s1.extend(zeros(m3));

    let mut s2 = zeros(m1);
    s2.extend(h2.kraus());
    s2.extend(zeros(m3));

    let mut s3 = zeros(m1);
    s3.extend(mix_slices(&cu2.adjoint(), &cv3.kraus(), d, n));
    s3.extend(mix_slices(
        defect(&cu3, &cu2, m3)?.as_matrix(),
        &h3.kraus(),
        d,
        n,
    ));

    let tv1 = Dilation::from_kraus(d, n, &s1)?;
    let tv2 = Dilation::from_kraus(d, n, &s2)?;
    let tv3 = Dilation::from_kraus(d, n, &s3)?;

    let overlap12_residual = operator_norm(&(&tv2.overlap(&tv1)? - &v2.overlap(v1)?))?;
    let overlap23_residual = operator_norm(&(&tv2.overlap(&tv3)? - &cv2.overlap(cv3)?))?;
    let dilation_residual = verify_dilation(&tv1, t1)?
        .max(verify_dilation(&tv2, t2)?)
        .max(verify_dilation(&tv3, t3)?);

    Ok(TriangleDilations {
        v1: tv1,
        v2: tv2,
        v3: tv3,
        overlap12_residual,
        overlap23_residual,
        dilation_residual,
    })
}
