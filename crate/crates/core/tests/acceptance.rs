//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use bures_core::cpmaps::{random_cp_map, random_density, random_rng, CpMap, HermMap};
use bures_core::metrics::{
    appendix_b_certificate, bures, bures_extension, bures_states, cb_norm, mixture_certificate,
    monotonicity_certificate, radon_nikodym_operator, triangle_certificate, PositiveFunctional,
    Side, Tolerances,
};
use bures_core::numerics::{c64, ComplexMatrix, HermitianMatrix, C64};
use bures_core::sdp::{self, Block, Functional, Relation, SdpProblem, Sense};
use nalgebra::DMatrix;
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn to_na(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Trace norm through nalgebra's SVD, independent of the crate's kernel.
fn oracle_trace_norm(m: &ComplexMatrix) -> f64 {
    to_na(m).svd(false, false).singular_values.iter().sum()
}

fn oracle_operator_norm(m: &ComplexMatrix) -> f64 {
    to_na(m)
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |a: f64, &b| a.max(b))
}

fn random_pair(d: usize, m1: usize, m2: usize, seed: u64) -> (CpMap, CpMap) {
    (
        random_cp_map(d, d, m1, seed).unwrap(),
        random_cp_map(d, d, m2, seed.wrapping_add(1_000_003)).unwrap(),
    )
}

/// Distance from 0 to the convex hull of points on the unit circle.
fn hull_distance(points: &[C64]) -> f64 {
    let mut angles: Vec<f64> = points.iter().map(|z| z.arg()).collect();
    angles.sort_by(f64::total_cmp);
    // The origin lies in the hull iff no angular gap exceeds π.
    let mut max_gap = 0.0f64;
    for k in 0..angles.len() {
        let next = if k + 1 < angles.len() { angles[k + 1] } else { angles[0] + 2.0 * PI };
        max_gap = max_gap.max(next - angles[k]);
    }
    if max_gap <= PI + 1e-15 {
        return 0.0;
    }
    // Otherwise the closest point lies on the chord spanning the largest gap.
    (max_gap / 2.0).cos().abs()
}

fn diag_unitary(phases: &[f64]) -> ComplexMatrix {
    let v: Vec<C64> = phases.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    ComplexMatrix::diag(&v)
}

fn criterion_1_2() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut instances = Vec::new();
    for k in 0..200u64 {
        let m1 = (k % 3) as usize + 1;
        let m2 = ((k / 3) % 3) as usize + 1;
        instances.push((2, m1, m2, 10_000 + k));
    }
    for k in 0..50u64 {
        let m1 = (k % 3) as usize + 1;
        let m2 = ((k / 3) % 3) as usize + 1;
        instances.push((3, m1, m2, 20_000 + k));
    }
    let (mut worst_sandwich, mut worst_witness, mut worst_residual) = (f64::INFINITY, 0.0f64, 0.0f64);
    let mut failures = 0;
    for &(d, m1, m2, seed) in &instances {
        let (t1, t2) = random_pair(d, m1, m2, seed);
        let cb = cb_norm(&HermMap::difference(&t1, &t2).unwrap()).unwrap().value;
        let w = bures(&t1, &t2).unwrap();
        let lower = cb / (t1.norm().sqrt() + t2.norm().sqrt());
        let upper = cb.sqrt();
        let slack = (w.beta - lower).min(upper - w.beta);
        worst_sandwich = worst_sandwich.min(slack);
        let witness = (oracle_operator_norm(&(w.v1.v() - w.v2.v())) - w.beta).abs();
        worst_witness = worst_witness.max(witness);
        worst_residual = worst_residual.max(w.dilation_residual);
        if slack < -1e-5 {
            failures += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let c1 = outcome(
        failures == 0 && elapsed < 600.0,
        format!(
            "{} instances, worst slack {worst_sandwich:.3e}, {failures} failures, {elapsed:.1}s",
            instances.len()
        ),
    );
    let c2 = outcome(
        worst_witness <= 1e-5 && worst_residual <= 1e-8,
        format!("max |‖V1−V2‖ − β| {worst_witness:.3e}, max dilation residual {worst_residual:.3e}"),
    );
    (c1, c2)
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..50u64 {
        let m1 = (k % 3) as usize + 1;
        let m2 = ((k / 3) % 3) as usize + 1;
        let (t1, t2) = random_pair(2, m1, m2, 30_000 + k);
        let b = bures(&t1, &t2).unwrap().beta;
        let e = bures_extension(&t1, &t2).unwrap().beta_ext;
        worst = worst.max((b - e).abs());
    }
    outcome(worst <= 1e-4, format!("max |β − β_ext| {worst:.3e} over 50 pairs"))
}

fn criterion_4() -> Outcome {
    let t1 = CpMap::identity(2);
    let t2 = CpMap::conjugation(&diag_unitary(&[0.0, PI])).unwrap();
    let ones = [c64(1.0, 0.0), c64(-1.0, 0.0)];
    let beta_oracle = (2.0 - 2.0 * hull_distance(&ones)).sqrt();
    // cb-norm oracle: 2 is attained at |+⟩ and is the largest possible value.
    let plus = ComplexMatrix::from_fn(2, 2, |_, _| c64(0.5, 0.0));
    let z = diag_unitary(&[0.0, PI]);
    let cb_oracle = oracle_trace_norm(&(&plus - &z.matmul(&plus).matmul(&z.adjoint())));

    let w = bures(&t1, &t2).unwrap();
    let cb = cb_norm(&HermMap::difference(&t1, &t2).unwrap()).unwrap().value;
    let lower = cb / 2.0;
    let mut ok = (w.beta - beta_oracle).abs() <= 1e-5
        && (cb - cb_oracle).abs() <= 1e-5
        && (lower - 1.0).abs() <= 1e-5
        && (cb.sqrt() - w.beta).abs() <= 1e-5;

    // The same hull oracle on further unitary pairs.
    let mut worst = 0.0f64;
    for phases in [vec![0.0, FRAC_PI_2], vec![0.0, 1.0], vec![0.3, 2.0, 4.0], vec![0.0, 0.5, 1.0]] {
        let u = diag_unitary(&phases);
        let pts: Vec<C64> = phases.iter().map(|&t| C64::from_polar(1.0, t)).collect();
        let oracle = 2.0 - 2.0 * hull_distance(&pts);
        let got = bures(&CpMap::identity(phases.len()), &CpMap::conjugation(&u).unwrap())
            .unwrap()
            .beta;
        worst = worst.max((got * got - oracle).abs());
    }
    ok &= worst <= 1e-5;
    outcome(
        ok,
        format!(
            "β {:.8} (oracle {beta_oracle:.8}), cb {cb:.8} (oracle {cb_oracle:.8}), lower {lower:.8}, hull family max err {worst:.2e}",
            w.beta
        ),
    )
}

fn criterion_5() -> Outcome {
    let tol = Tolerances::default();
    let (mut sym, mut self_dist, mut tri, mut overlap, mut identity_cb) =
        (0.0f64, 0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    let mut all_passed = true;
    for k in 0..100u64 {
        let m = |j: u64| ((k + j) % 3) as usize + 1;
        let t1 = random_cp_map(2, 2, m(0), 50_000 + k).unwrap();
        let t2 = random_cp_map(2, 2, m(1), 60_000 + k).unwrap();
        let t3 = random_cp_map(2, 2, m(2), 70_000 + k).unwrap();
        let b12 = bures(&t1, &t2).unwrap().beta;
        let b21 = bures(&t2, &t1).unwrap().beta;
        sym = sym.max((b12 - b21).abs());
        let b11 = bures(&t1, &t1).unwrap().beta;
        self_dist = self_dist.max(b11);
        // β = 0 forces the cb distance to vanish through the lower bound.
        let bound = (b11 + 1e-5) * 2.0 * t1.norm().sqrt();
        let cb11 = cb_norm(&HermMap::difference(&t1, &t1).unwrap()).unwrap().value;
        identity_cb = identity_cb.max(cb11);
        all_passed &= cb11 <= bound && cb11 <= 1e-4;
        let rec = triangle_certificate(&t1, &t2, &t3, &tol).unwrap();
        tri = tri.min(rec.slack);
        overlap = overlap.max(rec.overlap_residual);
        all_passed &= rec.passed;
    }
    let ok = all_passed && sym <= 1e-6 && self_dist <= 1e-6 && tri >= -1e-5 && overlap <= 1e-8;
    outcome(
        ok,
        format!(
            "asymmetry {sym:.2e}, max β(T,T) {self_dist:.2e}, cb(T−T) {identity_cb:.2e}, worst triangle slack {tri:.3e}, overlap residual {overlap:.2e}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let tol = Tolerances::default();
    let mut worst = f64::INFINITY;
    for k in 0..100u64 {
        let s = random_cp_map(2, 2, (k % 3) as usize + 1, 80_000 + k).unwrap();
        let t1 = random_cp_map(2, 2, ((k + 1) % 3) as usize + 1, 90_000 + k).unwrap();
        let t2 = random_cp_map(2, 2, ((k + 2) % 3) as usize + 1, 95_000 + k).unwrap();
        for side in [Side::Post, Side::Pre] {
            let r = monotonicity_certificate(&s, &t1, &t2, side, &tol).unwrap();
            worst = worst.min(r.slack);
        }
    }
    outcome(worst >= -1e-5, format!("worst slack {worst:.3e} over 200 compositions"))
}

fn random_functional(n: usize, rng: &mut impl Rng) -> PositiveFunctional {
    let scale = 0.5 + rng.random::<f64>();
    let rho = random_density(n, rng).into_inner().scale(scale);
    PositiveFunctional::new(rho).unwrap()
}

/// Functional with rank r ≤ n supported on the span of the first r columns
/// of a Haar unitary.
fn dominated_pair(n: usize, rank: usize, rng: &mut impl Rng) -> (PositiveFunctional, PositiveFunctional) {
    let u = bures_core::cpmaps::haar_isometry(n, rank, rng).unwrap();
    let a = random_density(rank, rng).into_inner();
    let b = random_density(rank, rng).into_inner().scale(0.5 + rng.random::<f64>());
    let lift = |m: &HermitianMatrix| HermitianMatrix::from_hermitian_part(&u.matmul(m).matmul(&u.adjoint()));
    (
        PositiveFunctional::new(lift(&a)).unwrap(),
        PositiveFunctional::new(lift(&b)).unwrap(),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = random_rng(7_000);
    let mut worst_a = f64::INFINITY;
    for k in 0..200 {
        let n = if k % 2 == 0 { 2 } else { 3 };
        let w0 = random_functional(n, &mut rng);
        let w1 = random_functional(n, &mut rng);
        let beta = bures_states(&w0, &w1).unwrap();
        let bound = oracle_trace_norm(&(w0.rho().as_matrix() - w1.rho().as_matrix())).sqrt();
        worst_a = worst_a.min(bound - beta);
    }
    let (mut defect, mut chain, mut mixture) = (0.0f64, f64::INFINITY, f64::INFINITY);
    let grid: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    for k in 0..100 {
        let n = if k % 2 == 0 { 2 } else { 3 };
        let rank = if k % 4 == 3 { n - 1 } else { n };
        let (w0, w1) = dominated_pair(n, rank, &mut rng);
        let h = radon_nikodym_operator(&w0, &w1).unwrap();
        let rebuilt = h.matmul(&w0.rho().matmul(&h));
        defect = defect.max(oracle_operator_norm(&(&rebuilt - w1.rho().as_matrix())));
        let rec = appendix_b_certificate(&w0, &w1).unwrap();
        chain = chain.min(rec.min_slack());
        mixture = mixture.min(mixture_certificate(&w0, &w1, &grid).unwrap().min_slack());
    }
    let ok = worst_a >= -1e-8 && defect <= 1e-9 && chain >= -1e-8 && mixture >= -1e-8;
    outcome(
        ok,
        format!(
            "(a) worst slack {worst_a:.3e}; (b) max defect {defect:.2e}; (c) worst chain slack {chain:.3e}; (d) worst mixture slack {mixture:.3e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let (mut err, mut gap, mut heuristic) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..100u64 {
        let d = 2 + (k % 2) as usize;
        let n = 2 + ((k / 2) % 2) as usize;
        let m = (k % 3) as usize + 1;
        let m = if d * m < n { n } else { m };
        let t = random_cp_map(d, n, m, 40_000 + k).unwrap();
        let r = cb_norm(&HermMap::from(&t)).unwrap();
        let exact = t.evaluate_at_identity().max_eigenvalue();
        err = err.max((r.value - exact).abs());
        gap = gap.max(r.gap);
        heuristic = heuristic.max(r.value - r.heuristic);
    }
    outcome(
        err <= 1e-6 && gap <= 1e-6 && heuristic <= 1e-4,
        format!("max |cb − ‖T(1)‖| {err:.2e}, max gap {gap:.2e}, max heuristic shortfall {heuristic:.2e}"),
    )
}

/// Solves A x = b for square A by Gaussian elimination with partial
/// pivoting; `None` if singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// min c·x over {A x = b, x ≥ 0} by enumerating basic feasible solutions.
fn vertex_oracle(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
    let (m, k) = (a.len(), c.len());
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << k) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let cols: Vec<usize> = (0..k).filter(|&j| mask >> j & 1 == 1).collect();
        let sub = a.iter().map(|row| cols.iter().map(|&j| row[j]).collect()).collect();
        if let Some(xb) = solve_square(sub, b.to_vec()) {
            if xb.iter().all(|&v| v >= -1e-12) {
                let value: f64 = cols.iter().zip(&xb).map(|(&j, v)| c[j] * v).sum();
                best = best.min(value);
            }
        }
    }
    best
}

fn criterion_9() -> Outcome {
    let mut rng = random_rng(9_000);
    let mut worst = 0.0f64;
    for inst in 0..20 {
        let k = 4 + inst % 3;
        let m = 2 + inst % 2;
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..k).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let x0: Vec<f64> = (0..k).map(|_| 0.2 + rng.random::<f64>()).collect();
        let b: Vec<f64> = a.iter().map(|row| row.iter().zip(&x0).map(|(p, q)| p * q).sum()).collect();
        let c: Vec<f64> = (0..k).map(|_| 0.1 + rng.random::<f64>()).collect();
        let oracle = vertex_oracle(&a, &b, &c);

        // The same LP as a diagonal k×k Hermitian block; the off-diagonal
        // entries are free and do not enter the objective.
        let maximize = inst % 2 == 1;
        let mut p = SdpProblem::new(
            if maximize { Sense::Maximize } else { Sense::Minimize },
            vec![Block::hermitian(k)],
        );
        let sign = if maximize { -1.0 } else { 1.0 };
        for (j, cj) in c.iter().enumerate() {
            p.objective.add_re_entry(0, j, j, sign * cj);
        }
        for (row, bi) in a.iter().zip(&b) {
            let mut f = Functional::new();
            for (j, aij) in row.iter().enumerate() {
                f.add_re_entry(0, j, j, *aij);
            }
            p.constrain(f, Relation::Eq, *bi);
        }
        let sol = sdp::solve(&p).unwrap();
        worst = worst.max((sign * sol.primal_value - oracle).abs());
    }
    outcome(worst <= 1e-7, format!("max deviation from vertex enumeration {worst:.2e} over 20 LPs"))
}

fn main() {
    let names = [
        "1 sandwich L ≤ β ≤ U",
        "2 witness attainment",
        "3 definition consistency",
        "4 tight upper-bound instance",
        "5 metric axioms",
        "6 monotonicity",
        "7 functional bounds",
        "8 cb-norm identities",
        "9 solver sanity",
    ];
    let results = std::thread::scope(|s| {
        let c12 = s.spawn(criterion_1_2);
        let rest: Vec<_> = [
            criterion_3 as fn() -> Outcome,
            criterion_4,
            criterion_5,
            criterion_6,
            criterion_7,
            criterion_8,
            criterion_9,
        ]
        .into_iter()
        .map(|f| s.spawn(f))
        .collect();
        let panicked = || outcome(false, "panicked".to_string());
        let (c1, c2) = c12.join().unwrap_or_else(|_| (panicked(), panicked()));
        let mut out = vec![c1, c2];
        out.extend(rest.into_iter().map(|h| h.join().unwrap_or_else(|_| panicked())));
        out
    });
    let mut failed = 0;
    for (name, r) in names.iter().zip(&results) {
        println!(
            "criterion {name}: {} ({})",
            if r.passed { "PASS" } else { "FAIL" },
            r.detail
        );
        if !r.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
