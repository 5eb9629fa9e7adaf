//! Small dense semidefinite programs over Hermitian and real blocks.
//!
//! A problem is stated in terms of real linear functionals on a list of
//! psd blocks. Hermitian blocks are handled through the real embedding
//! X ↦ [[Re X, −Im X], [Im X, Re X]], so the engine itself is real.

mod ipm;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c64, ComplexMatrix, HermitianMatrix, RealMatrix, C64};
use ipm::{Entries, Outcome, StandardForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Hermitian,
    Real,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    pub kind: BlockKind,
}

impl Block {
    pub fn hermitian(dim: usize) -> Self {
        Self {
            dim,
            kind: BlockKind::Hermitian,
        }
    }

    pub fn real(dim: usize) -> Self {
        Self {
            dim,
            kind: BlockKind::Real,
        }
    }
}

/// One term of a functional: X ↦ Re(value · X_block[col, row]), i.e. the
/// contribution Re tr(value · E_{row,col} · X).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

/// Real linear functional X ↦ Σ_b Re tr(C_b X_b), stored as a sum of terms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub terms: Vec<Term>,
}

impl Functional {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds Re(value · X_block[col, row]).
    pub fn add(&mut self, block: usize, row: usize, col: usize, value: C64) -> &mut Self {
        if value != c64(0.0, 0.0) {
            self.terms.push(Term {
                block,
                row,
                col,
                re: value.re,
                im: value.im,
            });
        }
        self
    }

    /// Adds Re tr(C X_block) for a dense coefficient matrix C.
    pub fn add_matrix(&mut self, block: usize, c: &ComplexMatrix) -> &mut Self {
        for i in 0..c.rows() {
            for j in 0..c.cols() {
                self.add(block, i, j, c[(i, j)]);
            }
        }
        self
    }

    /// Adds Re X_block[p, q].
    pub fn add_re_entry(&mut self, block: usize, p: usize, q: usize, scale: f64) -> &mut Self {
        self.add(block, q, p, c64(scale, 0.0))
    }

    /// Adds Im X_block[p, q].
    pub fn add_im_entry(&mut self, block: usize, p: usize, q: usize, scale: f64) -> &mut Self {
        self.add(block, q, p, c64(0.0, -scale))
    }

    pub fn evaluate(&self, blocks: &[HermitianMatrix]) -> f64 {
        self.terms
            .iter()
            .map(|t| (c64(t.re, t.im) * blocks[t.block][(t.col, t.row)]).re)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub functional: Functional,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub blocks: Vec<Block>,
    pub sense: Sense,
    pub objective: Functional,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(sense: Sense, blocks: Vec<Block>) -> Self {
        Self {
            blocks,
            sense,
            objective: Functional::new(),
            constraints: Vec::new(),
        }
    }

    pub fn constrain(&mut self, functional: Functional, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            functional,
            relation,
            rhs,
        });
    }

    /// Pretty-printed JSON form of the problem, for debugging.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s).map_err(|e| Error::InvalidProblem(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidProblem("no variable blocks".into()));
        }
        if let Some(b) = self.blocks.iter().position(|b| b.dim == 0) {
            return Err(Error::InvalidProblem(format!("block {b} has dimension 0")));
        }
        let check = |f: &Functional, what: &str| -> Result<()> {
            for t in &f.terms {
                let ok = t.block < self.blocks.len()
                    && t.row < self.blocks[t.block].dim
                    && t.col < self.blocks[t.block].dim;
                if !ok {
                    return Err(Error::InvalidProblem(format!(
                        "{what}: term ({}, {}, {}) out of range",
                        t.block, t.row, t.col
                    )));
                }
                if !(t.re.is_finite() && t.im.is_finite()) {
                    return Err(Error::NonFinite);
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (k, c) in self.constraints.iter().enumerate() {
            check(&c.functional, &format!("constraint {k}"))?;
            if !c.rhs.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SdpSolution {
    /// Optimal blocks, in problem order.
    pub primal: Vec<HermitianMatrix>,
    /// Multipliers y, one per constraint; for both senses the dual value is
    /// Σ y_i rhs_i.
    pub dual: Vec<f64>,
    /// Dual slack blocks, ±(C − Σ y_i A_i) with the sign making them psd.
    pub dual_slack: Vec<HermitianMatrix>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Stop once |primal − dual| falls below this.
    pub abs_gap: f64,
    /// Or once |primal − dual| / (1 + |primal| + |dual|) falls below this.
    pub rel_gap: f64,
    /// Relative primal and dual infeasibility required at termination.
    pub feasibility: f64,
    pub max_iterations: usize,
    /// When the iteration stalls before reaching the targets above, the best
    /// iterate is still returned if its absolute gap is within this bound (or
    /// its relative gap within a tenth of it).
    pub fallback_gap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            abs_gap: 1e-8,
            rel_gap: 1e-9,
            feasibility: 1e-9,
            max_iterations: 200,
            fallback_gap: 1e-8,
        }
    }
}

impl SolverOptions {
    /// Tighter targets, falling back to the default acceptance on stall.
    pub fn precise() -> Self {
        Self {
            abs_gap: 1e-12,
            rel_gap: 1e-12,
            feasibility: 1e-11,
            ..Self::default()
        }
    }
}

pub fn solve(problem: &SdpProblem) -> Result<SdpSolution> {
    solve_with(problem, &SolverOptions::default())
}

pub fn solve_with(problem: &SdpProblem, options: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let form = to_standard_form(problem)?;
    let tol = ipm::Tolerances {
        abs_gap: options.abs_gap,
        rel_gap: options.rel_gap,
        feas: options.feasibility,
        max_iterations: options.max_iterations,
    };
    match ipm::solve(&form, tol) {
        Outcome::Converged(it) => Ok(recover(problem, &it)),
        Outcome::Stalled(it) => {
            let sol = recover(problem, &it);
            let rel = sol.gap / (1.0 + sol.primal_value.abs() + sol.dual_value.abs());
            let gap_ok = sol.gap <= options.fallback_gap || rel <= 0.1 * options.fallback_gap;
            let feas_ok = it.primal_residual <= 1e-8 && it.dual_residual <= 1e-8;
            if gap_ok && feas_ok {
                Ok(sol)
            } else {
                Err(Error::NoConvergence {
                    iterations: it.iterations,
                    gap: sol.gap,
                    best: Some(Box::new(sol)),
                })
            }
        }
        Outcome::Infeasible(msg) => Err(Error::Infeasible(msg)),
    }
}

/// User blocks keep their indices; inequality slacks are appended as 1×1
/// real blocks.
fn to_standard_form(p: &SdpProblem) -> Result<StandardForm> {
    let mut dims: Vec<usize> = p
        .blocks
        .iter()
        .map(|b| match b.kind {
            BlockKind::Hermitian => 2 * b.dim,
            BlockKind::Real => b.dim,
        })
        .collect();

    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    let embed = |f: &Functional, scale: f64| -> Entries {
        let mut acc: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        let mut put = |b: usize, i: usize, j: usize, v: f64| {
            *acc.entry((b, i, j)).or_insert(0.0) += v;
        };
        for t in &f.terms {
            let (a, bi) = (t.re * scale, t.im * scale);
            let (r, c) = (t.row, t.col);
            match p.blocks[t.block].kind {
                BlockKind::Real => {
                    put(t.block, r, c, 0.5 * a);
                    put(t.block, c, r, 0.5 * a);
                }
                BlockKind::Hermitian => {
                    let k = p.blocks[t.block].dim;
                    put(t.block, r, c, 0.25 * a);
                    put(t.block, c, r, 0.25 * a);
                    put(t.block, k + r, k + c, 0.25 * a);
                    put(t.block, k + c, k + r, 0.25 * a);
                    put(t.block, r, k + c, -0.25 * bi);
                    put(t.block, c, k + r, 0.25 * bi);
                    put(t.block, k + r, c, 0.25 * bi);
                    put(t.block, k + c, r, -0.25 * bi);
                }
            }
        }
        let max = acc.values().fold(0.0f64, |m, v| m.max(v.abs()));
        acc.into_iter()
            .filter(|(_, v)| v.abs() > 1e-15 * max)
            .map(|((b, i, j), v)| (b, i, j, v))
            .collect()
    };

    let mut c: Vec<RealMatrix> = dims.iter().map(|&n| RealMatrix::zeros(n, n)).collect();
    for (b, i, j, v) in embed(&p.objective, sign) {
        c[b][(i, j)] += v;
    }

    let mut a = Vec::with_capacity(p.constraints.len());
    let mut rhs = Vec::with_capacity(p.constraints.len());
    for (k, con) in p.constraints.iter().enumerate() {
        let mut ent = embed(&con.functional, 1.0);
        if ent.is_empty() {
            return Err(Error::InvalidProblem(format!(
                "constraint {k} vanishes on Hermitian blocks"
            )));
        }
        match con.relation {
            Relation::Eq => {}
            Relation::Le | Relation::Ge => {
                let slack = dims.len();
                dims.push(1);
                c.push(RealMatrix::zeros(1, 1));
                let s = if con.relation == Relation::Le {
                    1.0
                } else {
                    -1.0
                };
                ent.push((slack, 0, 0, s));
            }
        }
        a.push(ent);
        rhs.push(con.rhs);
    }

    Ok(StandardForm { dims, c, a, b: rhs })
}

fn recover(p: &SdpProblem, it: &ipm::Iterate) -> SdpSolution {
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut primal = Vec::with_capacity(p.blocks.len());
    let mut slack = Vec::with_capacity(p.blocks.len());
    for (b, blk) in p.blocks.iter().enumerate() {
        let x = &it.x[b];
        let z = &it.z[b];
        match blk.kind {
            BlockKind::Real => {
                primal.push(HermitianMatrix::from_hermitian_part(&real_to_complex(x)));
                slack.push(HermitianMatrix::from_hermitian_part(&real_to_complex(z)));
            }
            BlockKind::Hermitian => {
                let k = blk.dim;
                let xm = ComplexMatrix::from_fn(k, k, |i, j| {
                    c64(
                        0.5 * (x[(i, j)] + x[(k + i, k + j)]),
                        0.5 * (x[(k + i, j)] - x[(i, k + j)]),
                    )
                });
                let zm = ComplexMatrix::from_fn(k, k, |i, j| {
                    c64(z[(i, j)] + z[(k + i, k + j)], z[(k + i, j)] - z[(i, k + j)])
                });
                primal.push(HermitianMatrix::from_hermitian_part(&xm));
                slack.push(HermitianMatrix::from_hermitian_part(&zm));
            }
        }
    }
    let primal_value = sign * it.primal;
    let dual_value = sign * it.dual;
    SdpSolution {
        primal,
        dual: it.y.iter().map(|v| sign * v).collect(),
        dual_slack: slack,
        primal_value,
        dual_value,
        gap: (primal_value - dual_value).abs(),
        primal_residual: it.primal_residual,
        dual_residual: it.dual_residual,
        iterations: it.iterations,
    }
}

fn real_to_complex(x: &RealMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(x.rows(), x.cols(), |i, j| c64(x[(i, j)], 0.0))
}
