use std::collections::BTreeMap;

use bures_core::cpmaps::{haar_isometry, random_cp_map, random_density, random_rng};
use bures_core::metrics::{
    appendix_b_certificate, bures_states, consistency_certificate, mixture_certificate,
    monotonicity_certificate, theorem1_certificate, triangle_certificate, PositiveFunctional,
    Side, Tolerances,
};
use bures_core::numerics::HermitianMatrix;
use bures_core::{Error, Result};
use rand::Rng;
use serde::Serialize;

pub const FAMILIES: [&str; 6] = [
    "theorem1",
    "triangle",
    "monotonicity",
    "consistency",
    "mixture",
    "appendix_b",
];

pub struct Config {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub count: usize,
    pub tolerances: Tolerances,
}

#[derive(Debug, Serialize)]
pub struct Failure {
    pub instance: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Default, Serialize)]
pub struct FamilySummary {
    pub passed: usize,
    pub failed: usize,
    /// Smallest margin seen; a check passes when margin ≥ −tolerance.
    pub worst_slack: Option<f64>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub count: usize,
    pub tolerances: Tolerances,
    pub passed: usize,
    pub failed: usize,
    pub families: BTreeMap<String, FamilySummary>,
}

/// Margin and violated checks of one certificate on one instance.
struct Check {
    slack: f64,
    violations: Vec<String>,
}

impl Check {
    fn new(slack: f64) -> Self {
        Self {
            slack,
            violations: Vec::new(),
        }
    }

    fn require(mut self, ok: bool, what: impl FnOnce() -> String) -> Self {
        if !ok {
            self.violations.push(what());
        }
        self
    }
}

/// Derived seed for stream `j` of an instance.
fn substream(seed: u64, j: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(j)
}

fn run_instance(cfg: &Config, seed: u64) -> Vec<(&'static str, Result<Check>)> {
    let tol = &cfg.tolerances;
    let (d, n) = (cfg.d, cfg.n);
    let m = cfg.m.max(n.div_ceil(d));
    let map = |j: u64, d: usize, n: usize| random_cp_map(d, n, m, substream(seed, j));
    let maps = (|| Ok((map(0, d, n)?, map(1, d, n)?, map(2, d, n)?)))();
    let (t1, t2, t3) = match maps {
        Ok(t) => t,
        Err(e) => {
            let e: Error = e;
            return FAMILIES
                .iter()
                .map(|&f| (f, Err(e.clone())))
                .collect();
        }
    };

    let theorem1 = theorem1_certificate(&t1, &t2, tol, seed).map(|r| {
        let mut c = Check::new(r.worst_slack());
        c.violations = r
            .violations
            .iter()
            .map(|k| format!("{k} slack {:e}", r.slacks[k]))
            .collect();
        c
    });

    let triangle = triangle_certificate(&t1, &t2, &t3, tol).map(|r| {
        Check::new(r.slack.min(r.constructed_slack))
            .require(r.slack >= -tol.triangle, || format!("triangle slack {:e}", r.slack))
            .require(r.constructed_slack >= -tol.triangle, || {
                format!("constructed pair beats β13 by {:e}", -r.constructed_slack)
            })
            .require(r.overlap_residual <= tol.overlap, || {
                format!("overlap residual {:e}", r.overlap_residual)
            })
            .require(r.dilation_residual <= tol.dilation, || {
                format!("dilation residual {:e}", r.dilation_residual)
            })
    });

    let monotonicity = (|| {
        let post = monotonicity_certificate(&map(3, n, n)?, &t1, &t2, Side::Post, tol)?;
        let pre = monotonicity_certificate(&map(4, d, d)?, &t1, &t2, Side::Pre, tol)?;
        Ok(Check::new(post.slack.min(pre.slack))
            .require(post.passed, || format!("post-composition slack {:e}", post.slack))
            .require(pre.passed, || format!("pre-composition slack {:e}", pre.slack)))
    })();

    let consistency = consistency_certificate(&t1, &t2, tol).map(|r| {
        Check::new(-r.difference).require(r.passed, || {
            format!("|β − β_ext| = {:e}", r.difference)
        })
    });

    let mut rng = random_rng(substream(seed, 5));
    let functional = |rng: &mut rand_chacha::ChaCha20Rng| -> Result<PositiveFunctional> {
        let scale = 0.5 + rng.random::<f64>();
        PositiveFunctional::new(random_density(d, rng).into_inner().scale(scale))
    };
    let mixture = (|| {
        let w0 = functional(&mut rng)?;
        let w1 = functional(&mut rng)?;
        let grid: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        let r = mixture_certificate(&w0, &w1, &grid)?;
        let slack = r.min_slack();
        Ok(Check::new(slack).require(slack >= -tol.mixture, || format!("mixture slack {slack:e}")))
    })();

    let appendix_b = (|| {
        // ρ1 supported inside the support of ρ0; rank deficient on odd seeds.
        let rank = if seed % 2 == 1 && d > 1 { d - 1 } else { d };
        let u = haar_isometry(d, rank, &mut rng)?;
        let lift = |h: HermitianMatrix| {
            HermitianMatrix::from_hermitian_part(&u.matmul(&h).matmul(&u.adjoint()))
        };
        let w0 = PositiveFunctional::new(lift(random_density(rank, &mut rng).into_inner()))?;
        let scale = 0.5 + rng.random::<f64>();
        let w1 =
            PositiveFunctional::new(lift(random_density(rank, &mut rng).into_inner().scale(scale)))?;
        let r = appendix_b_certificate(&w0, &w1)?;
        let norm_bound = w0.distance_norm(&w1)?.sqrt() - bures_states(&w0, &w1)?;
        let slack = r.min_slack().min(norm_bound);
        Ok(Check::new(slack)
            .require(r.min_slack() >= -tol.appendix_b, || {
                format!("reflection chain slack {:e}", r.min_slack())
            })
            .require(norm_bound >= -tol.appendix_b, || {
                format!("norm bound slack {norm_bound:e}")
            })
            .require(r.defect <= tol.radon_nikodym, || {
                format!("Radon-Nikodym defect {:e}", r.defect)
            }))
    })();

    vec![
        ("theorem1", theorem1),
        ("triangle", triangle),
        ("monotonicity", monotonicity),
        ("consistency", consistency),
        ("mixture", mixture),
        ("appendix_b", appendix_b),
    ]
}

/// Runs `count` instances, instance k with seed + k, spread over the
/// available cores; aggregation follows instance order.
pub fn run(cfg: &Config) -> Summary {
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(cfg.count);
    let mut results: Vec<Option<Vec<(&'static str, Result<Check>)>>> =
        (0..cfg.count).map(|_| None).collect();
    std::thread::scope(|s| {
        for (t, chunk) in results.chunks_mut(cfg.count.div_ceil(threads)).enumerate() {
            let base = t * cfg.count.div_ceil(threads);
            s.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    let seed = cfg.seed.wrapping_add((base + i) as u64);
                    *slot = Some(run_instance(cfg, seed));
                }
            });
        }
    });

    let mut families: BTreeMap<String, FamilySummary> = FAMILIES
        .iter()
        .map(|f| (f.to_string(), FamilySummary::default()))
        .collect();
    for (k, instance) in results.into_iter().enumerate() {
        let seed = cfg.seed.wrapping_add(k as u64);
        for (name, outcome) in instance.expect("every instance ran") {
            let fam = families.get_mut(name).expect("known family");
            let reason = match outcome {
                Ok(check) => {
                    fam.worst_slack = Some(match fam.worst_slack {
                        Some(w) => w.min(check.slack),
                        None => check.slack,
                    });
                    if check.violations.is_empty() {
                        None
                    } else {
                        Some(check.violations.join("; "))
                    }
                }
                Err(e) => Some(format!("error: {e}")),
            };
            match reason {
                None => fam.passed += 1,
                Some(reason) => {
                    fam.failed += 1;
                    fam.failures.push(Failure {
                        instance: k,
                        seed,
                        reason,
                    });
                }
            }
        }
    }
    let passed = families.values().map(|f| f.passed).sum();
    let failed = families.values().map(|f| f.failed).sum();
    Summary {
        d: cfg.d,
        n: cfg.n,
        m: cfg.m,
        seed: cfg.seed,
        count: cfg.count,
        tolerances: cfg.tolerances,
        passed,
        failed,
        families,
    }
}
