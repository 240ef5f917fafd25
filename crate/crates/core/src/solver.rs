//! Max-cut by SDP-bounded branch and bound.
//!
//! A node fixes some vertices to a side relative to vertex 0 and contracts
//! them into it, leaving `max x̄ᵀC_r x̄` over the free vertices with
//! `C_r = TᵀCT`. Each node is bounded by the cutting-plane SDP, rounded by
//! random hyperplanes followed by 1-opt on the full graph, and split on the
//! free vertex whose relaxed correlation with vertex 0 is weakest. Nodes with
//! few free vertices are enumerated.
//!
//! Open nodes are taken in batches and evaluated concurrently; results are
//! merged in batch order, so the search does not depend on thread timing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxcut::{cut_to_assignment, Cut, MaxCutInstance};
use crate::model::{is_integral, AssignmentPm1, BqpPm1Instance};
use crate::par::{self, Exec};
use crate::sdp::{cutting_plane_loop, gram_factor, CutBudget, PoolCut, SdpProblem, Sense};

/// Vertex cap of [`brute_force_maxcut`].
pub const BRUTE_FORCE_VERTEX_CAP: usize = 26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Wall-clock limit in seconds, checked between node batches.
    pub time_limit: Option<f64>,
    pub node_limit: u64,
    pub root_budget: CutBudget,
    pub node_budget: CutBudget,
    pub gw_trials: usize,
    pub seed: u64,
    /// `eᵀQe − ρ`; the search stops once the global bound falls below it.
    pub early_cutoff: Option<f64>,
    /// One node at a time, breadth first.
    pub deterministic: bool,
    /// Relative gap that counts as closed for non-integral weights.
    pub gap_tol: f64,
    /// Nodes with at most this many free vertices are enumerated.
    pub enumerate_below: usize,
    /// Nodes evaluated per batch.
    pub batch: usize,
    pub exec: Exec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            time_limit: None,
            node_limit: 1_000_000,
            root_budget: CutBudget {
                rounds: 10,
                per_round: 100,
                max_active: 500,
                ..CutBudget::default()
            },
            node_budget: CutBudget {
                rounds: 4,
                per_round: 60,
                max_active: 400,
                ..CutBudget::default()
            },
            gw_trials: 50,
            seed: 0x5eed,
            early_cutoff: None,
            deterministic: false,
            gap_tol: 1e-6,
            enumerate_below: 12,
            batch: 4,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxCutStatus {
    Optimal,
    EarlyInfeasible,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub best_cut: Cut,
    pub z_lb: f64,
    pub z_ub: f64,
    pub status: MaxCutStatus,
    pub nodes: u64,
    pub root_bound: f64,
    pub root_gap: f64,
    pub warnings: Vec<String>,
}

fn check_cap(n: usize) -> Result<()> {
    if n > BRUTE_FORCE_VERTEX_CAP {
        Err(Error::TooLarge {
            what: "vertices",
            value: n,
            limit: BRUTE_FORCE_VERTEX_CAP,
        })
    } else {
        Ok(())
    }
}

/// `max xᵀCx` over `x ∈ {−1,1}ᵈ` with `x₀ = 1`, by Gray-code enumeration.
/// Ties keep the first point in shard order.
pub fn max_quadratic_pm1(c: &DMatrix<f64>, exec: Exec) -> (f64, Vec<i8>) {
    let d = c.nrows();
    if d <= 1 {
        return (c.get((0, 0)).copied().unwrap_or(0.0), vec![1; d]);
    }
    let free = d - 1;
    let shard_bits = free.min(6);
    let low = free - shard_bits;
    let shards = par::map_range(exec, 1usize << shard_bits, |t| {
        let mut x: Vec<i8> = (0..d)
            .map(|i| {
                if i > low && (t >> (i - 1 - low)) & 1 == 1 {
                    -1
                } else {
                    1
                }
            })
            .collect();
        let xv = DVector::from_iterator(d, x.iter().map(|&v| f64::from(v)));
        let mut s = c * &xv;
        let mut val = xv.dot(&s);
        let mut best = (val, x.clone());
        for step in 1u64..(1u64 << low) {
            let j = 1 + step.trailing_zeros() as usize;
            let xj = f64::from(x[j]);
            val -= 4.0 * xj * (s[j] - c[(j, j)] * xj);
            s.axpy(-2.0 * xj, &c.column(j), 1.0);
            x[j] = -x[j];
            if val > best.0 {
                best = (val, x.clone());
            }
        }
        best
    });
    shards
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one shard")
}

/// Exact max-cut by enumerating the `2^(V−1)` cuts with vertex 0 on the `+1`
/// side.
pub fn brute_force_maxcut(g: &MaxCutInstance, exec: Exec) -> Result<(f64, Cut)> {
    check_cap(g.n_vertices())?;
    let (_, x) = max_quadratic_pm1(&g.c, exec);
    let cut = g.cut(x);
    Ok((cut.value, cut))
}

/// Moves single vertices across the partition while that strictly increases
/// the cut. Returns the value after each accepted move, starting with the
/// initial value.
pub fn one_opt(g: &MaxCutInstance, xbar: &mut [i8]) -> Vec<f64> {
    let n = g.n_vertices();
    let w = &g.weights;
    let mut gain: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| w[(i, j)] * f64::from(xbar[i] * xbar[j])).sum())
        .collect();
    let eps = 1e-12 * (1.0 + w.amax());
    let mut trace = vec![g.cut_value(xbar)];
    loop {
        let (i, &best) = gain
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("nonempty graph");
        if best <= eps {
            break;
        }
        let xi = f64::from(xbar[i]);
        for j in 0..n {
            if j != i {
                gain[j] -= 2.0 * w[(i, j)] * f64::from(xbar[j]) * xi;
            }
        }
        gain[i] = -gain[i];
        xbar[i] = -xbar[i];
        trace.push(trace.last().unwrap() + best);
    }
    trace
}

fn normalized(mut xbar: Vec<i8>) -> Vec<i8> {
    if xbar[0] < 0 {
        xbar.iter_mut().for_each(|v| *v = -*v);
    }
    xbar
}

/// Hyperplane rounding of the rows of `gram`, each followed by 1-opt. Returns
/// the best cut, normalized to `x̄₀ = 1`. Deterministic for a fixed seed.
pub fn gw_round_and_improve(gram: &DMatrix<f64>, g: &MaxCutInstance, trials: usize, seed: u64) -> Cut {
    round_and_improve(gram, |x| x.to_vec(), g, trials, seed)
}

fn round_and_improve<E>(gram: &DMatrix<f64>, expand: E, g: &MaxCutInstance, trials: usize, seed: u64) -> Cut
where
    E: Fn(&[i8]) -> Vec<i8>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Cut> = None;
    for _ in 0..trials.max(1) {
        let r = DVector::from_fn(gram.ncols(), |_, _| StandardNormal.sample(&mut rng));
        let proj = gram * r;
        let xr: Vec<i8> = proj.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect();
        let mut xbar = expand(&xr);
        one_opt(g, &mut xbar);
        let cut = g.cut(normalized(xbar));
        if best.as_ref().is_none_or(|b| cut.value > b.value) {
            best = Some(cut);
        }
    }
    best.expect("at least one trial")
}

#[derive(Debug, Clone)]
pub struct RootRelaxation {
    pub bound: f64,
    /// Rows are vectors whose Gram matrix is the relaxed `X`.
    pub gram: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub pool: Vec<PoolCut>,
    pub warning: Option<String>,
}

/// Upper bound on the max-cut from the cutting-plane SDP. Falls back to the
/// plain relaxation if the strengthened loop fails.
pub fn root_relaxation(g: &MaxCutInstance, budget: &CutBudget, exec: Exec) -> Result<RootRelaxation> {
    relax(&g.c, budget, Vec::new(), exec)
}

fn relax(c: &DMatrix<f64>, budget: &CutBudget, pool: Vec<PoolCut>, exec: Exec) -> Result<RootRelaxation> {
    let p = SdpProblem::unit_diagonal(c.clone(), Sense::Max);
    let (r, warning) = match cutting_plane_loop(&p, budget, pool, exec) {
        Ok(r) => (r, None),
        Err(e) => {
            log::warn!("cutting-plane bound failed ({e}); using the plain relaxation");
            (cutting_plane_loop(&p, &CutBudget::none(), Vec::new(), exec)?, Some(e.to_string()))
        }
    };
    Ok(RootRelaxation {
        bound: r.bound,
        gram: gram_factor(&r.solution.x),
        x: r.solution.x,
        pool: r.pool,
        warning,
    })
}

/// The assignment behind `cut` when its value reaches `eᵀQe − ρ`. Such a point
/// must be feasible; if it is not, the parameters were invalid.
pub fn feasible_from_cut(cut: &Cut, g: &MaxCutInstance, p: &BqpPm1Instance) -> Result<Option<AssignmentPm1>> {
    let Some(cutoff) = g.rho_cutoff else {
        return Err(Error::InvalidArgument("max-cut instance has no threshold".into()));
    };
    if cut.value < cutoff - 1e-9 * (1.0 + cutoff.abs()) {
        return Ok(None);
    }
    let x = cut_to_assignment(cut);
    if !p.is_feasible(&x)? {
        return Err(Error::ParameterInvalid(format!(
            "cut value {} reaches the threshold cut {cutoff} but the point has residual {}",
            cut.value,
            p.residual(&x)?
        )));
    }
    Ok(Some(x))
}

#[derive(Debug, Clone)]
struct Node {
    /// `0` free, `±1` same/opposite side as vertex 0. `fixed[0] = 1`.
    fixed: Vec<i8>,
    parent_bound: f64,
    depth: usize,
    id: u64,
    /// Cuts in this node's reduced coordinates.
    pool: Vec<PoolCut>,
}

impl Node {
    fn free(&self) -> Vec<usize> {
        (1..self.fixed.len()).filter(|&i| self.fixed[i] == 0).collect()
    }
}

struct Queued {
    prio: (f64, i64),
    node: Node,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.prio
            .0
            .total_cmp(&other.prio.0)
            .then(self.prio.1.cmp(&other.prio.1))
    }
}

fn queued(node: Node, deterministic: bool) -> Queued {
    let prio = if deterministic {
        (-(node.depth as f64), -(node.id as i64))
    } else {
        (node.parent_bound, -(node.id as i64))
    };
    Queued { prio, node }
}

/// `C_r(a, b) = Σ sᵢsⱼCᵢⱼ` over the vertices merged into reduced indices `a`, `b`.
fn reduced_matrix(c: &DMatrix<f64>, fixed: &[i8], free: &[usize]) -> DMatrix<f64> {
    let n = fixed.len();
    let k = free.len();
    let mut t = DMatrix::zeros(n, k + 1);
    for i in 0..n {
        if fixed[i] != 0 {
            t[(i, 0)] = f64::from(fixed[i]);
        }
    }
    for (a, &i) in free.iter().enumerate() {
        t[(i, a + 1)] = 1.0;
    }
    let r = t.transpose() * c * &t;
    (&r + r.transpose()) * 0.5
}

fn expand(fixed: &[i8], free: &[usize], xr: &[i8]) -> Vec<i8> {
    let mut x: Vec<i8> = fixed.iter().map(|&s| s * xr[0]).collect();
    for (a, &i) in free.iter().enumerate() {
        x[i] = xr[a + 1];
    }
    x
}

/// Merges reduced index `a` into index 0 with sign `s`.
fn contract_pool(pool: &[PoolCut], a: usize, s: i8) -> Vec<PoolCut> {
    pool.iter()
        .map(|c| {
            let mut b: Vec<f64> = c.b.iter().copied().collect();
            b[0] += f64::from(s) * b[a];
            b.remove(a);
            PoolCut::new(DVector::from_vec(b))
        })
        .filter(|c| c.b.iter().any(|&v| v != 0.0))
        .collect()
}

struct NodeOutcome {
    bound: f64,
    incumbent: Cut,
    /// Full vertex index to branch on; `None` when the node was solved exactly.
    branch: Option<usize>,
    /// Reduced index of `branch`.
    branch_reduced: usize,
    pool: Vec<PoolCut>,
    warning: Option<String>,
}

fn evaluate(g: &MaxCutInstance, node: &Node, cfg: &SolverConfig, exec: Exec) -> NodeOutcome {
    let free = node.free();
    let cr = reduced_matrix(&g.c, &node.fixed, &free);
    if free.len() <= cfg.enumerate_below {
        let (_, xr) = max_quadratic_pm1(&cr, Exec::Sequential);
        let cut = g.cut(normalized(expand(&node.fixed, &free, &xr)));
        return NodeOutcome {
            bound: cut.value,
            incumbent: cut,
            branch: None,
            branch_reduced: 0,
            pool: Vec::new(),
            warning: None,
        };
    }
    let budget = if node.depth == 0 { &cfg.root_budget } else { &cfg.node_budget };
    let seed = cfg.seed ^ node.id.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let (bound, gram, x, pool, warning) = match relax(&cr, budget, node.pool.clone(), exec) {
        Ok(r) => (r.bound, r.gram, Some(r.x), r.pool, r.warning),
        Err(e) => {
            // Every product of ±1 entries is at most 1 in magnitude.
            let trivial = cr.iter().map(|v| v.abs()).sum::<f64>();
            let warning = format!("node relaxation failed ({e}); using the trivial bound");
            log::warn!("{warning}");
            (trivial, DMatrix::identity(free.len() + 1, free.len() + 1), None, Vec::new(), Some(warning))
        }
    };
    let incumbent = round_and_improve(&gram, |xr| expand(&node.fixed, &free, xr), g, cfg.gw_trials, seed);
    let a = match &x {
        Some(x) => (1..=free.len())
            .min_by(|&p, &q| x[(0, p)].abs().total_cmp(&x[(0, q)].abs()).then(p.cmp(&q)))
            .expect("free vertices remain"),
        None => 1,
    };
    NodeOutcome {
        bound: bound.max(incumbent.value),
        incumbent,
        branch: Some(free[a - 1]),
        branch_reduced: a,
        pool,
        warning,
    }
}

/// Branch and bound; see the module docs.
pub fn solve_maxcut(g: &MaxCutInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    let start = Instant::now();
    let n = g.n_vertices();
    if n == 0 {
        return Err(Error::InvalidArgument("graph has no vertices".into()));
    }
    let integral = g.weights.iter().all(|&w| is_integral(w));
    // With integral weights every cut value is an integer.
    let effective = |b: f64| if integral { (b + 1e-6 * (1.0 + b.abs())).floor() } else { b };
    let closed = |b: f64, lb: f64| {
        if integral {
            b <= lb + 0.5
        } else {
            b <= lb + cfg.gap_tol * (1.0 + lb.abs())
        }
    };
    let batch = if cfg.deterministic { 1 } else { cfg.batch.max(1) };

    let mut best = g.cut(vec![1; n]);
    let mut heap = BinaryHeap::new();
    let mut next_id = 1u64;
    heap.push(queued(
        Node {
            fixed: std::iter::once(1).chain(std::iter::repeat_n(0, n - 1)).collect(),
            parent_bound: f64::INFINITY,
            depth: 0,
            id: 0,
            pool: Vec::new(),
        },
        cfg.deterministic,
    ));
    let mut closed_ub = f64::NEG_INFINITY;
    let mut nodes = 0u64;
    let mut root_bound = f64::NAN;
    let mut root_gap = f64::NAN;
    let mut warnings = Vec::new();

    let status = loop {
        let open_ub = heap
            .iter()
            .map(|q| effective(q.node.parent_bound))
            .fold(f64::NEG_INFINITY, f64::max);
        let global_ub = best.value.max(closed_ub).max(open_ub);
        if let Some(cutoff) = cfg.early_cutoff {
            if global_ub < cutoff - 1e-9 * (1.0 + cutoff.abs()) {
                break MaxCutStatus::EarlyInfeasible;
            }
        }
        if heap.is_empty() {
            break MaxCutStatus::Optimal;
        }
        let out_of_time = cfg.time_limit.is_some_and(|t| start.elapsed().as_secs_f64() >= t);
        if out_of_time || nodes >= cfg.node_limit {
            break MaxCutStatus::TimeLimit;
        }

        let mut work = Vec::with_capacity(batch);
        while work.len() < batch {
            let Some(q) = heap.pop() else { break };
            let eff = effective(q.node.parent_bound);
            if closed(eff, best.value) {
                closed_ub = closed_ub.max(eff);
            } else {
                work.push(q.node);
            }
        }
        if work.is_empty() {
            continue;
        }
        let outcomes = par::map(cfg.exec, &work, |node| evaluate(g, node, cfg, cfg.exec));

        for (node, out) in work.into_iter().zip(outcomes) {
            nodes += 1;
            if let Some(w) = out.warning {
                warnings.push(w);
            }
            if node.depth == 0 {
                root_bound = out.bound;
                root_gap = out.bound - out.incumbent.value;
            }
            if out.incumbent.value > best.value {
                best = out.incumbent;
            }
            let eff = effective(out.bound);
            let Some(v) = out.branch else {
                closed_ub = closed_ub.max(eff);
                continue;
            };
            if closed(eff, best.value) {
                closed_ub = closed_ub.max(eff);
                continue;
            }
            for s in [1i8, -1] {
                let mut fixed = node.fixed.clone();
                fixed[v] = s;
                heap.push(queued(
                    Node {
                        fixed,
                        parent_bound: out.bound,
                        depth: node.depth + 1,
                        id: next_id,
                        pool: contract_pool(&out.pool, out.branch_reduced, s),
                    },
                    cfg.deterministic,
                ));
                next_id += 1;
            }
        }
    };

    let open_ub = heap
        .iter()
        .map(|q| effective(q.node.parent_bound))
        .fold(f64::NEG_INFINITY, f64::max);
    let z_ub = best.value.max(closed_ub).max(open_ub);
    log::debug!(
        "max-cut search: {status:?}, {nodes} nodes, z in [{}, {z_ub}], {:.3}s",
        best.value,
        start.elapsed().as_secs_f64()
    );
    Ok(SolveReport {
        z_lb: best.value,
        z_ub,
        best_cut: best,
        status,
        nodes,
        root_bound,
        root_gap,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxcut::{build_q, to_maxcut};
    use crate::model::testing::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> MaxCutInstance {
        let mut w = DMatrix::zeros(n, n);
        for &(i, j, v) in edges {
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
        MaxCutInstance::from_weights(w).unwrap()
    }

    fn k3() -> MaxCutInstance {
        graph(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])
    }

    fn random_graph(n: usize, seed: u64, lo: i32, hi: i32) -> MaxCutInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v = f64::from(rng.random_range(lo..=hi));
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
        MaxCutInstance::from_weights(w).unwrap()
    }

    /// Independent oracle: every cut evaluated from the edge list.
    fn naive_maxcut(g: &MaxCutInstance) -> f64 {
        let n = g.n_vertices();
        (0..1u64 << (n - 1))
            .map(|mask| {
                let mut v = 0.0;
                for i in 0..n {
                    for j in i + 1..n {
                        let si = i > 0 && mask >> (i - 1) & 1 == 1;
                        let sj = j > 0 && mask >> (j - 1) & 1 == 1;
                        if si != sj {
                            v += g.weights[(i, j)];
                        }
                    }
                }
                v
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn brute_force_examples() {
        let e = graph(2, &[(0, 1, 1.0)]);
        assert_eq!(brute_force_maxcut(&e, Exec::Sequential).unwrap().0, 1.0);
        assert_eq!(brute_force_maxcut(&k3(), Exec::Sequential).unwrap().0, 2.0);
        let p = one_dim().to_plus_minus_one();
        let g = to_maxcut(&build_q(&p, 3.0).unwrap(), Some(2.0));
        let (z, cut) = brute_force_maxcut(&g, Exec::Sequential).unwrap();
        assert_eq!(z, 0.0);
        assert_eq!(cut.xbar, vec![1, 1]);
        assert!(brute_force_maxcut(&random_graph(27, 0, 0, 1), Exec::Sequential).is_err());
    }

    #[test]
    fn brute_force_matches_naive_oracle() {
        for seed in 0..20 {
            let g = random_graph(3 + (seed as usize % 9), seed, -4, 6);
            let z = brute_force_maxcut(&g, Exec::Parallel).unwrap().0;
            assert_eq!(z, naive_maxcut(&g));
            assert_eq!(brute_force_maxcut(&g, Exec::Sequential).unwrap().0, z);
        }
    }

    #[test]
    fn root_relaxation_examples() {
        let r = root_relaxation(&k3(), &CutBudget::default(), Exec::Sequential).unwrap();
        assert!((r.bound - 2.0).abs() < 1e-6);
        let plain = root_relaxation(&k3(), &CutBudget::none(), Exec::Sequential).unwrap();
        assert!((plain.bound - 2.25).abs() < 1e-6);
        let zero = MaxCutInstance::from_weights(DMatrix::zeros(5, 5)).unwrap();
        assert!(root_relaxation(&zero, &CutBudget::default(), Exec::Sequential).unwrap().bound.abs() < 1e-6);
        for seed in 0..20 {
            let g = random_graph(6 + seed as usize % 11, 50 + seed, -3, 5);
            let r = root_relaxation(&g, &SolverConfig::default().root_budget, Exec::Parallel).unwrap();
            assert!(r.bound >= brute_force_maxcut(&g, Exec::Parallel).unwrap().0 - 1e-9);
        }
    }

    #[test]
    fn rounding_examples() {
        let g = random_graph(9, 3, -2, 5);
        let (z, opt) = brute_force_maxcut(&g, Exec::Sequential).unwrap();
        let v = DMatrix::from_fn(9, 1, |i, _| f64::from(opt.xbar[i]));
        let cut = gw_round_and_improve(&v, &g, 5, 1);
        assert_eq!(cut.xbar, opt.xbar);
        assert_eq!(cut.value, z);

        let r = root_relaxation(&k3(), &CutBudget::none(), Exec::Sequential).unwrap();
        for seed in 0..10 {
            assert_eq!(gw_round_and_improve(&r.gram, &k3(), 1, seed).value, 2.0);
        }
        for seed in 0..20 {
            let g = random_graph(5 + seed as usize % 12, 100 + seed, -5, 5);
            let r = root_relaxation(&g, &CutBudget::none(), Exec::Sequential).unwrap();
            let cut = gw_round_and_improve(&r.gram, &g, 10, seed);
            assert!(cut.value <= brute_force_maxcut(&g, Exec::Sequential).unwrap().0 + 1e-9);
            assert_eq!(cut, gw_round_and_improve(&r.gram, &g, 10, seed));
        }
    }

    #[test]
    fn one_opt_is_monotone_and_locally_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for seed in 0..30 {
            let g = random_graph(12, seed, -6, 6);
            let mut x: Vec<i8> = (0..12).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
            let trace = one_opt(&g, &mut x);
            assert!(trace.windows(2).all(|w| w[1] > w[0]));
            assert!((trace.last().unwrap() - g.cut_value(&x)).abs() < 1e-9);
            for i in 0..12 {
                let mut y = x.clone();
                y[i] = -y[i];
                assert!(g.cut_value(&y) <= g.cut_value(&x) + 1e-9);
            }
        }
    }

    #[test]
    fn solve_matches_brute_force() {
        for seed in 0..30 {
            let n = 4 + seed as usize % 16;
            let (lo, hi) = [(0, 1), (-5, 5), (-10, 3)][seed as usize % 3];
            let g = random_graph(n, 200 + seed, lo, hi);
            let cfg = SolverConfig {
                enumerate_below: 6,
                ..SolverConfig::default()
            };
            let rep = solve_maxcut(&g, &cfg).unwrap();
            let (z, _) = brute_force_maxcut(&g, Exec::Parallel).unwrap();
            assert_eq!(rep.status, MaxCutStatus::Optimal);
            assert_eq!(rep.z_lb, z, "seed {seed}");
            assert!(rep.z_lb <= rep.z_ub && rep.z_ub - rep.z_lb <= 0.5);
            assert_eq!(g.cut_value(&rep.best_cut.xbar), rep.z_lb);
        }
    }

    #[test]
    fn solve_fractional_weights() {
        for seed in 0..10 {
            let g = random_graph(14, 300 + seed, -7, 9);
            let g = MaxCutInstance::from_weights(g.weights.map(|w| w / 3.7)).unwrap();
            let cfg = SolverConfig {
                enumerate_below: 5,
                ..SolverConfig::default()
            };
            let rep = solve_maxcut(&g, &cfg).unwrap();
            let (z, _) = brute_force_maxcut(&g, Exec::Parallel).unwrap();
            assert_eq!(rep.status, MaxCutStatus::Optimal);
            assert!((rep.z_lb - z).abs() < 1e-9);
            assert!(rep.z_ub - rep.z_lb <= 1e-6 * (1.0 + rep.z_ub.abs()));
        }
    }

    #[test]
    fn zero_graph_single_node() {
        let g = MaxCutInstance::from_weights(DMatrix::zeros(20, 20)).unwrap();
        let rep = solve_maxcut(&g, &SolverConfig::default()).unwrap();
        assert_eq!((rep.status, rep.z_lb, rep.nodes), (MaxCutStatus::Optimal, 0.0, 1));
    }

    #[test]
    fn infeasible_one_dim_variant() {
        let p = parity_infeasible().to_plus_minus_one();
        let g = to_maxcut(&build_q(&p, 1.0).unwrap(), Some(0.0));
        let rep = solve_maxcut(&g, &SolverConfig::default()).unwrap();
        assert_eq!(g.penalized_value(rep.z_lb), 1.0);
        let cutoff = SolverConfig {
            early_cutoff: g.rho_cutoff,
            ..SolverConfig::default()
        };
        let rep = solve_maxcut(&g, &cutoff).unwrap();
        assert_eq!(rep.status, MaxCutStatus::EarlyInfeasible);
    }

    #[test]
    fn feasible_from_cut_examples() {
        let p = one_dim().to_plus_minus_one();
        let g = to_maxcut(&build_q(&p, 3.0).unwrap(), Some(2.0));
        let x = feasible_from_cut(&g.cut(vec![1, 1]), &g, &p).unwrap().unwrap();
        assert_eq!(x.as_slice(), &[1]);
        assert_eq!(feasible_from_cut(&g.cut(vec![1, -1]), &g, &p).unwrap(), None);
        // A threshold that is too generous exposes the invalid pair.
        let bad = to_maxcut(&build_q(&p, 3.0).unwrap(), Some(3.0));
        assert!(matches!(
            feasible_from_cut(&bad.cut(vec![1, -1]), &bad, &p),
            Err(Error::ParameterInvalid(_))
        ));
    }

    #[test]
    fn cuts_above_threshold_are_feasible() {
        for seed in 0..10 {
            let p = random(8, 2, 400 + seed).to_plus_minus_one();
            let ex = crate::model::enumerate_extremes(&p, Exec::Sequential).unwrap();
            let Some(ell) = ex.ell_star else { continue };
            let u = ex.u_star.unwrap();
            let g = to_maxcut(&build_q(&p, u - ell + 1.0).unwrap(), Some(u));
            for x in all_points(9) {
                let cut = g.cut(x.as_slice().to_vec());
                if let Some(y) = feasible_from_cut(&cut, &g, &p).unwrap() {
                    assert!(p.is_feasible(&y).unwrap());
                }
            }
        }
    }

    #[test]
    fn deterministic_mode_is_reproducible() {
        let g = random_graph(16, 9, -4, 4);
        let cfg = SolverConfig {
            deterministic: true,
            enumerate_below: 6,
            ..SolverConfig::default()
        };
        let a = solve_maxcut(&g, &cfg).unwrap();
        let b = solve_maxcut(&g, &SolverConfig { exec: Exec::Sequential, ..cfg }).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn bounds_bracket_the_optimum(seed in 0u64..10_000, n in 3usize..15) {
            let g = random_graph(n, seed, -5, 5);
            let cfg = SolverConfig { enumerate_below: 4, node_limit: 3, ..SolverConfig::default() };
            let rep = solve_maxcut(&g, &cfg).unwrap();
            let (z, _) = brute_force_maxcut(&g, Exec::Parallel).unwrap();
            prop_assert!(rep.z_lb <= z + 1e-9);
            prop_assert!(z <= rep.z_ub + 1e-9);
        }
    }
}
