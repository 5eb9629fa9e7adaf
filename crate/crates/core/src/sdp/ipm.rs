//! Infeasible-start primal–dual interior point method for real block
//! semidefinite programs in standard form
//!
//!   minimize ⟨C, X⟩  subject to  ⟨A_i, X⟩ = b_i,  X ⪰ 0,
//!
//! with Nesterov–Todd scaling and a Mehrotra predictor–corrector.

use crate::numerics::{sym_eigen, RealMatrix};

/// Sparse symmetric coefficient: (block, row, col, value), both triangles.
pub(crate) type Entries = Vec<(usize, usize, usize, f64)>;

pub(crate) struct StandardForm {
    pub dims: Vec<usize>,
    pub c: Vec<RealMatrix>,
    pub a: Vec<Entries>,
    pub b: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Tolerances {
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub feas: f64,
    pub max_iterations: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct Iterate {
    pub x: Vec<RealMatrix>,
    pub y: Vec<f64>,
    pub z: Vec<RealMatrix>,
    pub primal: f64,
    pub dual: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl Iterate {
    pub fn gap(&self) -> f64 {
        (self.primal - self.dual).abs()
    }

    fn score(&self) -> f64 {
        let rel = self.gap() / (1.0 + self.primal.abs() + self.dual.abs());
        rel.max(self.primal_residual).max(self.dual_residual)
    }
}

pub(crate) enum Outcome {
    Converged(Iterate),
    Stalled(Iterate),
    Infeasible(String),
}

fn apply_a(entries: &Entries, x: &[RealMatrix]) -> f64 {
    entries.iter().map(|&(b, i, j, v)| v * x[b][(i, j)]).sum()
}

fn dot_blocks(x: &[RealMatrix], z: &[RealMatrix]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a.dot(b)).sum()
}

fn norm_blocks(x: &[RealMatrix]) -> f64 {
    x.iter().map(|a| a.dot(a)).sum::<f64>().sqrt()
}

struct Scaling {
    g: RealMatrix,
    g_inv: RealMatrix,
    w: RealMatrix,
    d: Vec<f64>,
}

fn nt_scaling(x: &RealMatrix, z: &RealMatrix) -> Option<Scaling> {
    let l = x.cholesky()?;
    let ltzl = l.transpose_mul(&z.matmul(&l)).symmetrize();
    let (lam, u) = sym_eigen(&ltzl);
    if lam.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let d: Vec<f64> = lam.iter().map(|v| v.sqrt()).collect();
    let inv_sqrt_d: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let sqrt_d: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
    let g = l.matmul(&u).matmul(&RealMatrix::diag(&inv_sqrt_d));
    let g_inv = RealMatrix::diag(&sqrt_d)
        .matmul(&u.transpose())
        .matmul(&l.lower_inverse());
    let w = g.mul_transpose(&g).symmetrize();
    Some(Scaling { g, g_inv, w, d })
}

/// Largest α ≤ α_max with D + αΔ ⪰ 0, evaluated in the scaled frame where
/// the current iterate is the diagonal D.
fn max_step(d: &[f64], delta: &RealMatrix) -> f64 {
    let n = d.len();
    let s: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let m = RealMatrix::from_fn(n, n, |i, j| s[i] * delta[(i, j)] * s[j]);
    let (vals, _) = sym_eigen(&m);
    let lmin = vals.first().copied().unwrap_or(0.0);
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

struct Direction {
    dx: Vec<RealMatrix>,
    dy: Vec<f64>,
    dz: Vec<RealMatrix>,
}

pub(crate) fn solve(p: &StandardForm, tol: Tolerances) -> Outcome {
    let nb = p.dims.len();
    let m = p.b.len();
    let total_dim: usize = p.dims.iter().sum();
    let b_norm = p.b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_norm = norm_blocks(&p.c);

    let mut a_norm = vec![vec![0.0; nb]; m];
    for (i, ent) in p.a.iter().enumerate() {
        for &(b, _, _, v) in ent {
            a_norm[i][b] += v * v;
        }
    }
    for row in &mut a_norm {
        for v in row.iter_mut() {
            *v = v.sqrt();
        }
    }

    let mut x = Vec::with_capacity(nb);
    let mut z = Vec::with_capacity(nb);
    for (blk, &n) in p.dims.iter().enumerate() {
        let nf = n as f64;
        let mut xi: f64 = 10f64.max(nf.sqrt());
        let mut eta: f64 = 10f64.max(nf.sqrt()).max(p.c[blk].frobenius_norm());
        for i in 0..m {
            xi = xi.max(nf * (1.0 + p.b[i].abs()) / (1.0 + a_norm[i][blk]));
            eta = eta.max(a_norm[i][blk]);
        }
        x.push(RealMatrix::scaled_identity(n, xi));
        z.push(RealMatrix::scaled_identity(n, eta));
    }
    let mut y = vec![0.0; m];

    let mut best: Option<Iterate> = None;
    let mut slow_steps = 0;

    for iter in 0..=tol.max_iterations {
        let ax: Vec<f64> = p.a.iter().map(|e| apply_a(e, &x)).collect();
        let rp: Vec<f64> = (0..m).map(|i| p.b[i] - ax[i]).collect();
        let mut aty: Vec<RealMatrix> = p.dims.iter().map(|&n| RealMatrix::zeros(n, n)).collect();
        for (i, ent) in p.a.iter().enumerate() {
            for &(b, r, c, v) in ent {
                aty[b][(r, c)] += y[i] * v;
            }
        }
        let rd: Vec<RealMatrix> = (0..nb).map(|k| p.c[k].sub(&aty[k]).sub(&z[k])).collect();

        let primal = dot_blocks(&p.c, &x);
        let dual: f64 = p.b.iter().zip(&y).map(|(b, y)| b * y).sum();
        let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + b_norm);
        let dinf = norm_blocks(&rd) / (1.0 + c_norm);
        let it = Iterate {
            x: x.clone(),
            y: y.clone(),
            z: z.clone(),
            primal,
            dual,
            primal_residual: pinf,
            dual_residual: dinf,
            iterations: iter,
        };

        let xnorm = norm_blocks(&x);
        let ynorm = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(xnorm.is_finite() && ynorm.is_finite()) || xnorm > 1e12 || ynorm > 1e12 {
            return Outcome::Infeasible(format!(
                "iterates diverged at iteration {iter} (|X| = {xnorm:.3e}, |y| = {ynorm:.3e})"
            ));
        }

        let gap = it.gap();
        let converged = pinf <= tol.feas
            && dinf <= tol.feas
            && (gap <= tol.abs_gap || gap / (1.0 + primal.abs() + dual.abs()) <= tol.rel_gap);
        if best.as_ref().is_none_or(|b| it.score() < b.score()) {
            best = Some(it.clone());
        }
        if converged {
            return Outcome::Converged(it);
        }
        if iter == tol.max_iterations {
            break;
        }

        let mu = dot_blocks(&x, &z) / total_dim as f64;

        let mut scal = Vec::with_capacity(nb);
        for k in 0..nb {
            match nt_scaling(&x[k], &z[k]) {
                Some(s) => scal.push(s),
                None => return Outcome::Stalled(best.unwrap()),
            }
        }

        let schur = match schur_factor(p, &scal) {
            Some(l) => l,
            None => return Outcome::Stalled(best.unwrap()),
        };

        let wrdw: Vec<RealMatrix> = (0..nb)
            .map(|k| scal[k].w.matmul(&rd[k]).matmul(&scal[k].w))
            .collect();

        let direction = |rc: &[RealMatrix]| -> Direction {
            let rhs: Vec<f64> = (0..m)
                .map(|i| rp[i] - apply_a(&p.a[i], rc) + apply_a(&p.a[i], &wrdw))
                .collect();
            let dy = schur.cholesky_solve(&rhs);
            let mut dz = rd.clone();
            for (i, ent) in p.a.iter().enumerate() {
                for &(b, r, c, v) in ent {
                    dz[b][(r, c)] -= dy[i] * v;
                }
            }
            let dx: Vec<RealMatrix> = (0..nb)
                .map(|k| {
                    rc[k]
                        .sub(&scal[k].w.matmul(&dz[k]).matmul(&scal[k].w))
                        .symmetrize()
                })
                .collect();
            Direction { dx, dy, dz }
        };

        let scaled = |dir: &Direction| -> (Vec<RealMatrix>, Vec<RealMatrix>) {
            let sx = (0..nb)
                .map(|k| {
                    scal[k]
                        .g_inv
                        .matmul(&dir.dx[k])
                        .mul_transpose(&scal[k].g_inv)
                        .symmetrize()
                })
                .collect();
            let sz = (0..nb)
                .map(|k| {
                    scal[k]
                        .g
                        .transpose_mul(&dir.dz[k].matmul(&scal[k].g))
                        .symmetrize()
                })
                .collect();
            (sx, sz)
        };

        let steps = |sx: &[RealMatrix], sz: &[RealMatrix]| -> (f64, f64) {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for k in 0..nb {
                ap = ap.min(max_step(&scal[k].d, &sx[k]));
                ad = ad.min(max_step(&scal[k].d, &sz[k]));
            }
            (ap, ad)
        };

        // Predictor.
        let rc_aff: Vec<RealMatrix> = x.iter().map(|xk| xk.scale(-1.0)).collect();
        let aff = direction(&rc_aff);
        let (sx_aff, sz_aff) = scaled(&aff);
        let (ap_aff, ad_aff) = steps(&sx_aff, &sz_aff);
        let ap_aff = ap_aff.min(1.0);
        let ad_aff = ad_aff.min(1.0);
        let mut mu_aff = 0.0;
        for k in 0..nb {
            let xa = x[k].axpy(ap_aff, &aff.dx[k]);
            let za = z[k].axpy(ad_aff, &aff.dz[k]);
            mu_aff += xa.dot(&za);
        }
        mu_aff /= total_dim as f64;
        let sigma = if mu > 0.0 {
            (mu_aff.max(0.0) / mu).min(1.0).powi(3)
        } else {
            0.0
        };

        // Corrector.
        let rc: Vec<RealMatrix> = (0..nb)
            .map(|k| {
                let d = &scal[k].d;
                let n = d.len();
                let cross = sx_aff[k].matmul(&sz_aff[k]);
                let h = RealMatrix::from_fn(n, n, |i, j| {
                    let mut r = -0.5 * (cross[(i, j)] + cross[(j, i)]);
                    if i == j {
                        r += sigma * mu - d[i] * d[i];
                    }
                    2.0 * r / (d[i] + d[j])
                });
                scal[k].g.matmul(&h).mul_transpose(&scal[k].g)
            })
            .collect();
        let dir = direction(&rc);
        let (sx, sz) = scaled(&dir);
        let (ap, ad) = steps(&sx, &sz);
        let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);

        if ap < 1e-7 && ad < 1e-7 {
            slow_steps += 1;
            if slow_steps >= 3 {
                return Outcome::Stalled(best.unwrap());
            }
        } else {
            slow_steps = 0;
        }

        for k in 0..nb {
            x[k] = x[k].axpy(ap, &dir.dx[k]).symmetrize();
            z[k] = z[k].axpy(ad, &dir.dz[k]).symmetrize();
        }
        for i in 0..m {
            y[i] += ad * dir.dy[i];
        }
    }
    Outcome::Stalled(best.unwrap())
}

/// Cholesky factor of the Schur complement M_ij = ⟨A_i, W A_j W⟩, with a
/// growing diagonal ridge if the plain factorization fails.
fn schur_factor(p: &StandardForm, scal: &[Scaling]) -> Option<RealMatrix> {
    let m = p.b.len();
    let mut schur = RealMatrix::zeros(m, m);
    for j in 0..m {
        let mut touched: Vec<usize> = p.a[j].iter().map(|e| e.0).collect();
        touched.sort_unstable();
        touched.dedup();
        let mut waw: Vec<Option<RealMatrix>> = vec![None; p.dims.len()];
        for &blk in &touched {
            let w = &scal[blk].w;
            let n = p.dims[blk];
            let mut t = RealMatrix::zeros(n, n);
            for &(b, r, c, v) in &p.a[j] {
                if b != blk {
                    continue;
                }
                for k in 0..n {
                    let wkr = v * w[(k, r)];
                    if wkr == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        t[(k, l)] += wkr * w[(c, l)];
                    }
                }
            }
            waw[blk] = Some(t);
        }
        for i in j..m {
            let mut s = 0.0;
            for &(b, r, c, v) in &p.a[i] {
                if let Some(t) = &waw[b] {
                    s += v * t[(r, c)];
                }
            }
            schur[(i, j)] = s;
            schur[(j, i)] = s;
        }
    }
    if let Some(l) = schur.cholesky() {
        return Some(l);
    }
    let scale = (0..m)
        .fold(0.0f64, |a, i| a.max(schur[(i, i)].abs()))
        .max(1e-300);
    let mut ridge = 1e-14 * scale;
    for _ in 0..8 {
        let shifted = schur.add(&RealMatrix::scaled_identity(m, ridge));
        if let Some(l) = shifted.cholesky() {
            return Some(l);
        }
        ridge *= 100.0;
    }
    None
}
