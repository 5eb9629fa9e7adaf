use bures_core::cpmaps::{
    choi_from_kraus, compose, kraus_from_choi, random_channel, random_cp_map, random_density,
    random_rng, CpMap,
};
use bures_core::dilations::{
    common_pair_from_contraction, minimal_dilation, verify_dilation, Contraction,
};
use bures_core::metrics::{
    bures, bures_fixed_pair, bures_states, fidelity, BuresObjective, PositiveFunctional,
};
use bures_core::numerics::{
    c64, operator_norm, svd, trace_norm, ComplexMatrix, HermitianMatrix, C64,
};
use bures_core::sdp::{self, Block, Functional, Relation, SdpProblem, Sense};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c64(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
    })
}

fn random_unitary(n: usize, rng: &mut ChaCha20Rng) -> ComplexMatrix {
    bures_core::cpmaps::haar_isometry(n, n, rng).unwrap()
}

fn random_contraction(m1: usize, m2: usize, rng: &mut ChaCha20Rng) -> Contraction {
    let g = gaussian_matrix(m1, m2, rng);
    let norm = operator_norm(&g).unwrap();
    let radius = rng.random::<f64>();
    Contraction::new(g.scale(radius / norm)).unwrap()
}

fn fast() -> ProptestConfig {
    ProptestConfig {
        cases: 32,
        ..ProptestConfig::default()
    }
}

fn slow() -> ProptestConfig {
    ProptestConfig {
        cases: 12,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(fast())]

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), r in 1usize..5, c in 1usize..5) {
        let mut rng = random_rng(seed);
        let m = gaussian_matrix(r, c, &mut rng);
        let f = svd(&m).unwrap();
        let k = r.min(c);
        let mut rebuilt = ComplexMatrix::zeros(r, c);
        for j in 0..k {
            for a in 0..r {
                for b in 0..c {
                    rebuilt[(a, b)] += f.u[(a, j)] * f.s[j] * f.v[(b, j)].conj();
                }
            }
        }
        prop_assert!((&rebuilt - &m).max_abs() < 1e-10);
        for w in f.s.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        prop_assert!(trace_norm(&m).unwrap() >= operator_norm(&m).unwrap() - 1e-12);
    }

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = random_rng(seed);
        let g = gaussian_matrix(n, n, &mut rng);
        let h = HermitianMatrix::from_hermitian_part(&g);
        let e = h.eigh();
        prop_assert!((e.reassemble(&e.values).as_matrix() - h.as_matrix()).max_abs() < 1e-10);
        let gram = e.vectors.adjoint_mul(&e.vectors);
        prop_assert!((&gram - &ComplexMatrix::identity(n)).max_abs() < 1e-10);
    }

    #[test]
    fn choi_kraus_roundtrip(seed in any::<u64>(), d in 1usize..4, n in 1usize..4, m in 1usize..4) {
        let mut rng = random_rng(seed);
        let kraus: Vec<ComplexMatrix> = (0..m).map(|_| gaussian_matrix(d, n, &mut rng)).collect();
        let j = choi_from_kraus(&kraus, d, n).unwrap();
        let back = kraus_from_choi(&j, d, n).unwrap();
        prop_assert!(back.len() <= m.min(d * n));
        let j2 = choi_from_kraus(&back, d, n).unwrap();
        prop_assert!((j.as_matrix() - j2.as_matrix()).max_abs() < 1e-9 * (1.0 + j.max_abs()));
    }

    #[test]
    fn kraus_and_choi_evaluation_agree(seed in any::<u64>(), d in 1usize..4, n in 1usize..4) {
        let t = random_cp_map(d, n, 2 + n, seed).unwrap();
        let mut rng = random_rng(seed ^ 1);
        let a = gaussian_matrix(d, d, &mut rng);
        let x = t.apply(&a).unwrap();
        let y = t.apply_via_choi(&a).unwrap();
        prop_assert!((&x - &y).max_abs() < 1e-10);
    }

    #[test]
    fn channels_are_unital(seed in any::<u64>(), d in 1usize..4, n in 1usize..4, m in 1usize..4) {
        prop_assume!(d * m >= n);
        let t = random_channel(d, n, m, seed).unwrap();
        let one = t.evaluate_at_identity();
        prop_assert!((one.as_matrix() - &ComplexMatrix::identity(n)).max_abs() < 1e-10);
    }

    #[test]
    fn composition_matches_sequential_application(seed in any::<u64>()) {
        let t = random_cp_map(2, 3, 2, seed).unwrap();
        let s = random_cp_map(3, 2, 2, seed ^ 7).unwrap();
        let st = compose(&s, &t).unwrap();
        let mut rng = random_rng(seed ^ 3);
        let a = gaussian_matrix(2, 2, &mut rng);
        let direct = s.apply(&t.apply(&a).unwrap()).unwrap();
        prop_assert!((&st.apply(&a).unwrap() - &direct).max_abs() < 1e-10);
    }

    #[test]
    fn minimal_dilation_is_gauge_covariant(seed in any::<u64>(), m in 1usize..4) {
        let t = random_cp_map(2, 2, m, seed).unwrap();
        let v = minimal_dilation(&t);
        prop_assert!(verify_dilation(&v, &t).unwrap() < 1e-8);
        prop_assert_eq!(v.m(), t.kraus_rank());
        let mut rng = random_rng(seed ^ 5);
        let u = random_unitary(v.m(), &mut rng);
        let g = v.gauge(&u).unwrap();
        prop_assert!(verify_dilation(&g, &t).unwrap() < 1e-8);
    }

    #[test]
    fn common_pair_overlap_and_distance(seed in any::<u64>()) {
        let t1 = random_cp_map(2, 2, 2, seed).unwrap();
        let t2 = random_cp_map(2, 2, 3, seed ^ 11).unwrap();
        let mut rng = random_rng(seed ^ 13);
        let w = random_contraction(t1.kraus_rank(), t2.kraus_rank(), &mut rng);
        let (v1, v2) = common_pair_from_contraction(&t1, &t2, &w).unwrap();
        prop_assert!(verify_dilation(&v1, &t1).unwrap() < 1e-8);
        prop_assert!(verify_dilation(&v2, &t2).unwrap() < 1e-8);
        let obj = BuresObjective::new(&t1, &t2).unwrap();
        let omega = obj.omega(w.matrix());
        prop_assert!((&v1.overlap(&v2).unwrap() - &omega).max_abs() < 1e-10);
        // ‖V1 − V2‖² = λmax(T1(1) + T2(1) − V1†V2 − V2†V1).
        let s = t1.evaluate_at_identity().add(&t2.evaluate_at_identity());
        let o = v1.overlap(&v2).unwrap();
        let h = HermitianMatrix::from_hermitian_part(&(&(s.as_matrix() - &o) - &o.adjoint()));
        let d = bures_fixed_pair(&v1, &v2).unwrap();
        prop_assert!((d - h.max_eigenvalue().max(0.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn fidelity_is_symmetric(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = random_rng(seed);
        let w0 = PositiveFunctional::new(random_density(n, &mut rng).into_inner()).unwrap();
        let w1 = PositiveFunctional::new(random_density(n, &mut rng).into_inner().scale(0.7)).unwrap();
        let f01 = fidelity(&w0, &w1).unwrap();
        let f10 = fidelity(&w1, &w0).unwrap();
        prop_assert!((f01 - f10).abs() < 1e-10);
        prop_assert!(f01 <= (w0.norm() * w1.norm()).sqrt() + 1e-10);
    }

    #[test]
    fn objective_is_concave(seed in any::<u64>(), m1 in 1usize..4, m2 in 1usize..4) {
        let t1 = random_cp_map(2, 2, m1, seed).unwrap();
        let t2 = random_cp_map(2, 2, m2, seed ^ 17).unwrap();
        let obj = BuresObjective::new(&t1, &t2).unwrap();
        let mut rng = random_rng(seed ^ 19);
        let a = random_density(2, &mut rng).into_inner();
        let b = random_density(2, &mut rng).into_inner();
        let mid = a.scale(0.5).add(&b.scale(0.5));
        let lhs = obj.value(&mid).unwrap();
        let rhs = 0.5 * (obj.value(&a).unwrap() + obj.value(&b).unwrap());
        prop_assert!(lhs >= rhs - 1e-9);
    }
}

/// Random LP in standard form with a known strictly feasible point.
fn lp_instance(rng: &mut ChaCha20Rng, k: usize, m: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let a: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..k).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
        .collect();
    let x0: Vec<f64> = (0..k).map(|_| 0.2 + rng.random::<f64>()).collect();
    let b = a.iter().map(|r| r.iter().zip(&x0).map(|(p, q)| p * q).sum()).collect();
    let c = (0..k).map(|_| 0.1 + rng.random::<f64>()).collect();
    (a, b, c)
}

fn lp_problem(a: &[Vec<f64>], b: &[f64], c: &[f64], scale: f64, block: Block) -> SdpProblem {
    let mut p = SdpProblem::new(Sense::Minimize, vec![block]);
    for (j, cj) in c.iter().enumerate() {
        p.objective.add_re_entry(0, j, j, scale * cj);
    }
    for (row, bi) in a.iter().zip(b) {
        let mut f = Functional::new();
        for (j, aij) in row.iter().enumerate() {
            f.add_re_entry(0, j, j, *aij);
        }
        p.constrain(f, Relation::Eq, *bi);
    }
    p
}

/// Random SDP min Re tr(CX) s.t. Re tr(A_i X) = b_i with b from a feasible
/// positive definite point and C ⪰ 0 (bounded below).
fn hermitian_instance(rng: &mut ChaCha20Rng, n: usize, m: usize) -> SdpProblem {
    let x0 = random_density(n, rng).into_inner().add(&HermitianMatrix::identity(n).scale(0.1));
    let g = gaussian_matrix(n, n, rng);
    let c = HermitianMatrix::from_hermitian_part(&g.matmul(&g.adjoint()));
    let mut p = SdpProblem::new(Sense::Minimize, vec![Block::hermitian(n)]);
    p.objective.add_matrix(0, c.as_matrix());
    for _ in 0..m {
        let a = HermitianMatrix::from_hermitian_part(&gaussian_matrix(n, n, rng));
        let mut f = Functional::new();
        f.add_matrix(0, a.as_matrix());
        p.constrain(f, Relation::Eq, a.pair(&x0));
    }
    p
}

proptest! {
    #![proptest_config(slow())]

    #[test]
    fn weak_duality_and_scaling(seed in any::<u64>(), n in 2usize..5, m in 1usize..4) {
        let mut rng = random_rng(seed);
        let p = hermitian_instance(&mut rng, n, m);
        let sol = sdp::solve(&p).unwrap();
        prop_assert!(sol.primal_value >= sol.dual_value - 1e-9);
        prop_assert!(sol.gap <= 1e-6 * (1.0 + sol.primal_value.abs()));

        let c = 3.5;
        let mut scaled = p.clone();
        for t in &mut scaled.objective.terms {
            t.re *= c;
            t.im *= c;
        }
        let s2 = sdp::solve(&scaled).unwrap();
        // both optima are only known up to their certified gaps
        let slack = s2.gap + c * sol.gap + 1e-9 * (1.0 + c * sol.primal_value.abs());
        prop_assert!((s2.primal_value - c * sol.primal_value).abs() <= slack);
        prop_assert!((s2.dual_value - c * sol.dual_value).abs() <= slack);
    }

    #[test]
    fn real_and_hermitian_embeddings_agree(seed in any::<u64>(), k in 3usize..6) {
        let mut rng = random_rng(seed);
        let (a, b, c) = lp_instance(&mut rng, k, 2);
        let herm = sdp::solve(&lp_problem(&a, &b, &c, 1.0, Block::hermitian(k))).unwrap();
        let real = sdp::solve(&lp_problem(&a, &b, &c, 1.0, Block::real(k))).unwrap();
        prop_assert!((herm.primal_value - real.primal_value).abs() < 1e-8);
    }

    #[test]
    fn witness_is_not_beaten_by_sampled_contractions(seed in any::<u64>(), m1 in 1usize..4, m2 in 1usize..4) {
        let t1 = random_cp_map(2, 2, m1, seed).unwrap();
        let t2 = random_cp_map(2, 2, m2, seed ^ 23).unwrap();
        let w = bures(&t1, &t2).unwrap();
        prop_assert!((w.witness_distance - w.beta).abs() <= 1e-5);
        let mut rng = random_rng(seed ^ 29);
        for _ in 0..50 {
            let c = random_contraction(w.w_star.m1(), w.w_star.m2(), &mut rng);
            let (v1, v2) = common_pair_from_contraction(&t1, &t2, &c).unwrap();
            prop_assert!(bures_fixed_pair(&v1, &v2).unwrap() >= w.beta - 1e-5);
        }
    }

    #[test]
    fn bures_is_symmetric_and_vanishes_on_the_diagonal(seed in any::<u64>()) {
        let t1 = random_cp_map(2, 2, 2, seed).unwrap();
        let t2 = random_cp_map(2, 2, 1, seed ^ 31).unwrap();
        let b12 = bures(&t1, &t2).unwrap().beta;
        let b21 = bures(&t2, &t1).unwrap().beta;
        prop_assert!((b12 - b21).abs() <= 1e-6);
        prop_assert!(bures(&t1, &t1).unwrap().beta <= 1e-6);
    }

    #[test]
    fn preparations_reduce_to_state_distance(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = random_rng(seed);
        let w0 = PositiveFunctional::new(random_density(d, &mut rng).into_inner()).unwrap();
        let w1 = PositiveFunctional::new(random_density(d, &mut rng).into_inner().scale(0.6)).unwrap();
        let t0 = w0.to_cp_map().unwrap();
        let t1 = w1.to_cp_map().unwrap();
        let b = bures(&t0, &t1).unwrap().beta;
        prop_assert!((b - bures_states(&w0, &w1).unwrap()).abs() <= 1e-6);
    }
}

#[test]
fn same_seed_gives_identical_channels() {
    let a = random_channel(2, 2, 3, 42).unwrap();
    let b = random_channel(2, 2, 3, 42).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn channel_json_roundtrip_is_exact() {
    let t = random_cp_map(3, 2, 2, 8).unwrap();
    let back = CpMap::from_json(&t.to_json()).unwrap();
    assert_eq!(t.kraus(), back.kraus());
}

#[test]
fn unitary_phase_pair_matches_closed_form() {
    // β² = 2 − 2 cos(θ/2) for the identity against a relative phase θ ≤ π.
    for k in 0..=8 {
        let theta = std::f64::consts::PI * k as f64 / 8.0;
        let u = ComplexMatrix::diag(&[c64(1.0, 0.0), C64::from_polar(1.0, theta)]);
        let b = bures(&CpMap::identity(2), &CpMap::conjugation(&u).unwrap()).unwrap();
        let expected = 2.0 - 2.0 * (theta / 2.0).cos();
        assert!((b.beta * b.beta - expected).abs() < 1e-5, "θ = {theta}: {}", b.beta);
    }
}
