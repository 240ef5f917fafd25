use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::cuts::{separate_five_clique, separate_triangle, HeuristicParams};
use super::{solve_with, ConstraintMatrix, Direction, SdpOptions, SdpProblem, SdpSolution, SdpStatus, Sense};
use crate::error::{Error, Result};
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutBudget {
    pub rounds: usize,
    pub per_round: usize,
    pub min_violation: f64,
    /// Pool size cap; the most violated new cuts win.
    pub max_active: usize,
    pub tol: f64,
    pub five_clique: HeuristicParams,
}

impl Default for CutBudget {
    fn default() -> Self {
        Self {
            rounds: 20,
            per_round: 300,
            min_violation: 1e-3,
            max_active: 1200,
            tol: 1e-8,
            five_clique: HeuristicParams::default(),
        }
    }
}

impl CutBudget {
    /// No separation rounds: a plain solve.
    pub fn none() -> Self {
        Self {
            rounds: 0,
            ..Self::default()
        }
    }
}

/// A valid inequality `(bᵀXb) ≥ 1` kept in a cut pool. Entries of `b` are
/// integers; contracted cuts may carry magnitude 2 or more.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolCut {
    pub b: DVector<f64>,
    inactive_rounds: u8,
}

impl PoolCut {
    pub fn new(b: DVector<f64>) -> Self {
        Self {
            b,
            inactive_rounds: 0,
        }
    }

    fn key(&self) -> Vec<i64> {
        let mut k: Vec<i64> = self.b.iter().map(|v| v.round() as i64).collect();
        if let Some(&first) = k.iter().find(|&&v| v != 0) {
            if first < 0 {
                k.iter_mut().for_each(|v| *v = -*v);
            }
        }
        k
    }
}

#[derive(Debug, Clone)]
pub struct CuttingPlaneResult {
    /// Solution of the last successful round.
    pub solution: SdpSolution,
    /// Best safe bound over all rounds (upper for `Max`, lower for `Min`).
    pub bound: f64,
    /// Running best safe bound after each round.
    pub bound_trace: Vec<f64>,
    /// Raw relaxation value of each round.
    pub value_trace: Vec<f64>,
    /// Cuts active at the end.
    pub pool: Vec<PoolCut>,
    pub sdp_iterations: usize,
}

/// Solve, separate, add, repeat.
///
/// Triangle inequalities are separated first; 5-clique inequalities only in
/// rounds where no triangle is violated. Cuts whose multiplier stays below
/// `1e-7` for two consecutive rounds are dropped. The reported bound is the
/// best safe bound seen, so it is monotone across rounds.
pub fn cutting_plane_loop(
    p: &SdpProblem,
    budget: &CutBudget,
    warm_pool: Vec<PoolCut>,
    exec: Exec,
) -> Result<CuttingPlaneResult> {
    let opts = SdpOptions {
        tol: budget.tol,
        ..SdpOptions::default()
    };
    let direction = match p.sense {
        Sense::Max => Direction::Upper,
        Sense::Min => Direction::Lower,
    };
    let better = |a: f64, b: f64| match p.sense {
        Sense::Max => a.min(b),
        Sense::Min => a.max(b),
    };
    let drop_threshold = 1e-7 * p.objective.amax().max(1.0);

    let mut pool = warm_pool;
    let mut last: Option<SdpSolution> = None;
    let mut best = match p.sense {
        Sense::Max => f64::INFINITY,
        Sense::Min => f64::NEG_INFINITY,
    };
    let mut bound_trace = Vec::new();
    let mut value_trace = Vec::new();
    let mut iterations = 0;

    for round in 0..=budget.rounds {
        let mut q = p.clone();
        q.ineq_cuts.extend(
            pool.iter()
                .map(|c| (ConstraintMatrix::RankOne(c.b.clone()), 1.0)),
        );
        let sol = solve_with(&q, &opts)?;
        iterations += sol.iterations;
        if sol.status != SdpStatus::Solved {
            if last.is_none() {
                return Err(Error::Sdp(format!(
                    "root relaxation ended with {:?} after {} iterations",
                    sol.status, sol.iterations
                )));
            }
            log::debug!("cutting-plane round {round} stopped: {:?}", sol.status);
            break;
        }
        best = better(best, sol.safe_bound(direction)?);
        bound_trace.push(best);
        value_trace.push(sol.value);

        for (c, &w) in pool.iter_mut().zip(sol.cut_duals.iter()) {
            if w < drop_threshold {
                c.inactive_rounds += 1;
            } else {
                c.inactive_rounds = 0;
            }
        }
        pool.retain(|c| c.inactive_rounds < 2);

        let done = round == budget.rounds;
        let x = sol.x.clone();
        last = Some(sol);
        if done {
            break;
        }

        let mut found = separate_triangle(&x, budget.min_violation, budget.per_round, exec);
        if found.is_empty() {
            let mut params = budget.five_clique;
            params.min_violation = budget.min_violation;
            params.budget = budget.per_round;
            params.seed = params.seed.wrapping_add(round as u64);
            found = separate_five_clique(&x, &params, exec);
        }
        let known: std::collections::HashSet<Vec<i64>> = pool.iter().map(PoolCut::key).collect();
        let room = budget.max_active.saturating_sub(pool.len());
        let fresh: Vec<PoolCut> = found
            .iter()
            .map(|c| PoolCut::new(c.to_vector(p.dim)))
            .filter(|c| !known.contains(&c.key()))
            .take(room)
            .collect();
        if fresh.is_empty() {
            break;
        }
        pool.extend(fresh);
    }

    let solution = last.expect("first round either succeeded or returned");
    Ok(CuttingPlaneResult {
        solution,
        bound: best,
        bound_trace,
        value_trace,
        pool,
        sdp_iterations: iterations,
    })
}
