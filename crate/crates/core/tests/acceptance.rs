//! End-to-end acceptance checks. Runs as a plain binary so that every check
//! prints exactly one PASS/FAIL line, even when an earlier one fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use bqpcut::bounds::{
    lifting_residuals, projected_upper_bound, shor_bounds, strengthened_bounds, trivial_bounds, ProjectedBound,
};
use bqpcut::io::bench::{adjacency_from_edges, bench_run, SuiteSpec};
use bqpcut::io::generate::{
    build_k_cluster, cbqp_default_ks, gen_rgi, make_parity_conflicting, random_cbqp, RgiFamily, RgiSpec,
};
use bqpcut::maxcut::{build_q, cut_to_assignment, to_maxcut, MaxCutInstance};
use bqpcut::model::{brute_force_penalized, brute_force_solve, enumerate_extremes, Extremes};
use bqpcut::par::{self, Exec};
use bqpcut::penalty::{default_epsilon, gw_params, lasserre_params, validate_params, PenaltyParameters};
use bqpcut::pipeline::{compare_penalties, least_violated, solve, ModeChoice, Outcome, PipelineConfig};
use bqpcut::solver::{brute_force_maxcut, solve_maxcut, MaxCutStatus, SolverConfig};
use bqpcut::{AssignmentPm1, Bqp01Instance, BqpPm1Instance, Solution, SolutionStatus};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Case {
    id: String,
    p01: Bqp01Instance,
    p: BqpPm1Instance,
    ex: Extremes,
    truth: Solution,
}

impl Case {
    fn new(id: String, p01: Bqp01Instance) -> Self {
        let p = p01.to_plus_minus_one();
        let ex = enumerate_extremes(&p, Exec::Parallel).unwrap();
        let truth = brute_force_solve(&p, Exec::Parallel).unwrap();
        Case { id, p01, p, ex, truth }
    }
}

const ONE_INTERVALS: [(i64, i64); 3] = [(-1, 1), (-3, 3), (-7, 7)];
const TWO_A: [(i64, i64); 2] = [(0, 1), (0, 3)];
const TWO_B: [i64; 3] = [10, 15, 20];
const TWO_F: [(i64, i64); 4] = [(0, 5), (-5, 5), (0, 10), (-10, 10)];
const PER_FAMILY: usize = 200;
const PARITY: usize = 40;

fn spec(family: RgiFamily, k: usize) -> RgiSpec {
    let n = 8 + k % 11;
    let m = 1 + (k / 11) % 5;
    let seed = 1000 * (family as u64 + 1) + k as u64;
    match family {
        RgiFamily::One => RgiSpec {
            family,
            n,
            m,
            a_interval: ONE_INTERVALS[k % 3],
            f_interval: ONE_INTERVALS[(k / 3) % 3],
            b_v: 0,
            seed,
        },
        RgiFamily::Two => RgiSpec {
            family,
            n,
            m,
            a_interval: TWO_A[k % 2],
            f_interval: TWO_F[(k / 2) % 4],
            b_v: TWO_B[(k / 8) % 3],
            seed,
        },
    }
}

fn corpus() -> Vec<Case> {
    let mut raw = Vec::new();
    for family in [RgiFamily::One, RgiFamily::Two] {
        for k in 0..PER_FAMILY {
            raw.push((format!("{family:?}-{k}"), gen_rgi(&spec(family, k)).unwrap()));
        }
    }
    for k in 0..PARITY {
        let base = gen_rgi(&spec(RgiFamily::One, 7 * k + 3)).unwrap();
        let r = k % base.m();
        raw.push((format!("parity-{k}"), make_parity_conflicting(&base, r).unwrap()));
    }
    raw.into_iter().map(|(id, p)| Case::new(id, p)).collect()
}

fn mode_for(k: usize) -> ModeChoice {
    [ModeChoice::Auto, ModeChoice::Gw, ModeChoice::Cli, ModeChoice::Las][k % 4]
}

fn one_dim() -> Bqp01Instance {
    Bqp01Instance::new(
        DMatrix::zeros(1, 1),
        DVector::from_element(1, 2.0),
        DMatrix::from_element(1, 1, 1.0),
        DVector::from_element(1, 1.0),
    )
    .unwrap()
}

fn golden() -> Check {
    let start = Instant::now();
    let p01 = one_dim();
    let p = p01.to_plus_minus_one();
    ensure(
        p.a[(0, 0)] == 0.5 && p.b[0] == 0.5 && p.c[0] == 1.0 && p.f[(0, 0)] == 0.0 && p.alpha == 1.0,
        || format!("transformed data A={} b={} c={} F={} α={}", p.a, p.b, p.c, p.f, p.alpha),
    )?;
    let ex = enumerate_extremes(&p, Exec::Sequential).unwrap();
    ensure(ex.ell_star == Some(0.0) && ex.u_star == Some(2.0), || {
        format!("ℓ* = {:?}, u* = {:?}", ex.ell_star, ex.u_star)
    })?;

    let minus = AssignmentPm1::new(vec![-1]).unwrap();
    let plus = AssignmentPm1::new(vec![1]).unwrap();
    let (h, x) = brute_force_penalized(&p, 2.0, Exec::Sequential).unwrap();
    ensure(x == minus && h == 2.0, || format!("σ = 2: minimizer {x:?} with h = {h}"))?;
    ensure(p.penalized_objective(2.0, &plus).unwrap() == 2.0, || "h(1) ≠ 2 at σ = 2".into())?;
    ensure(!p.is_feasible(&minus).unwrap(), || "x = −1 should be infeasible".into())?;
    let g = to_maxcut(&build_q(&p, 2.0).unwrap(), None);
    let (z, _) = brute_force_maxcut(&g, Exec::Sequential).unwrap();
    ensure(g.constant - z == 2.0, || format!("σ = 2: max-cut gives h* = {}", g.constant - z))?;

    let cfg = PipelineConfig {
        penalty_mode: ModeChoice::Gw,
        epsilon: Some(1.0),
        ..Default::default()
    };
    let out = solve(&p01, &cfg).unwrap();
    let pp = out.parameters_used.as_ref().unwrap();
    ensure(pp.sigma == 3.0, || format!("σ = {} instead of 3", pp.sigma))?;
    ensure(
        out.solution.status == SolutionStatus::Optimal
            && out.solution.x01 == Some(vec![1])
            && out.solution.objective == Some(2.0),
        || format!("pipeline returned {:?}", out.solution),
    )?;
    let auto = solve(&p01, &PipelineConfig::default()).unwrap();
    ensure(auto.solution.x01 == Some(vec![1]) && auto.solution.objective == Some(2.0), || {
        format!("default pipeline returned {:?}", auto.solution)
    })?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.2}s"))?;
    Ok(format!("{secs:.3}s"))
}

fn matches(truth: &Solution, got: &Solution) -> bool {
    truth.status == got.status
        && match (truth.objective, got.objective) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-8,
            (None, None) => true,
            _ => false,
        }
}

fn oracle(cases: &[Case], outcomes: &[Result<Outcome, String>], secs: f64) -> Check {
    let mut bad = Vec::new();
    for (c, o) in cases.iter().zip(outcomes) {
        match o {
            Ok(o) if matches(&c.truth, &o.solution) => {
                if let Some(x) = &o.solution.x01 {
                    if c.p01.residual01(x).unwrap() != 0.0 {
                        bad.push(format!("{}: reported point is infeasible", c.id));
                    }
                }
            }
            Ok(o) => bad.push(format!(
                "{}: got {:?}/{:?}, enumeration {:?}/{:?}",
                c.id, o.solution.status, o.solution.objective, c.truth.status, c.truth.objective
            )),
            Err(e) => bad.push(format!("{}: {e}", c.id)),
        }
    }
    let infeasible = cases.iter().filter(|c| c.truth.status == SolutionStatus::Infeasible).count();
    let parity = cases.iter().filter(|c| c.id.starts_with("parity")).count();
    let per_family = |f: &str| cases.iter().filter(|c| c.id.starts_with(f)).count();
    ensure(per_family("One") >= 200 && per_family("Two") >= 200, || "corpus too small".into())?;
    ensure(parity >= 30, || format!("only {parity} parity-conflicting instances"))?;
    ensure(bad.is_empty(), || format!("{} mismatches, first: {}", bad.len(), bad[0]))?;
    ensure(secs < 600.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "{} instances ({infeasible} infeasible, {parity} parity-conflicting), {secs:.1}s",
        cases.len()
    ))
}

fn sandwich(cases: &[Case]) -> Check {
    let start = Instant::now();
    let budget = PipelineConfig::default().bound_budget;
    let small: Vec<&Case> = cases.iter().filter(|c| c.p.n() <= 14).collect();
    let errors: Vec<String> = par::map(Exec::Parallel, &small, |c| {
        let p = &c.p;
        let triv = trivial_bounds(p);
        let (shor, strong) = (shor_bounds(p, Exec::Sequential), strengthened_bounds(p, &budget, Exec::Sequential));
        let proj = projected_upper_bound(p, &budget, Exec::Sequential);
        let le = |a: f64, b: f64| a <= b + 1e-6;
        let mut errs = Vec::new();
        let mut chk = |ok: bool, what: &str| {
            if !ok {
                errs.push(format!(
                    "{}: {what} (triv {}, ℓ̂ {}, ℓ̃ {}, min {}, ℓ* {:?}, u* {:?}, ũ {}, û {})",
                    c.id, triv.ell, shor.ell, strong.ell, c.ex.hypercube_min, c.ex.ell_star, c.ex.u_star, strong.u, shor.u
                ))
            }
        };
        chk(le(triv.ell, shor.ell), "trivial ℓ ≤ ℓ̂");
        chk(le(shor.ell, strong.ell), "ℓ̂ ≤ ℓ̃");
        chk(le(strong.ell, c.ex.hypercube_min), "ℓ̃ ≤ min f");
        if let Some(ls) = c.ex.ell_star {
            chk(le(c.ex.hypercube_min, ls), "min f ≤ ℓ*");
        }
        if let Some(us) = c.ex.u_star {
            chk(le(us, strong.u) && le(strong.u, shor.u), "u* ≤ ũ ≤ û");
        }
        match proj {
            ProjectedBound::Bound(b) => {
                if let Some(us) = c.ex.u_star {
                    chk(le(us, b.u), "u* ≤ u_Δ");
                }
                chk(le(b.u, shor.u), "u_Δ ≤ û");
            }
            ProjectedBound::Infeasible(_) => chk(c.ex.u_star.is_none(), "certificate on a feasible instance"),
        }
        errs
    })
    .into_iter()
    .flatten()
    .collect();
    let secs = start.elapsed().as_secs_f64();
    ensure(errors.is_empty(), || format!("{} violations, first: {}", errors.len(), errors[0]))?;
    ensure(secs < 300.0, || format!("took {secs:.1}s"))?;
    Ok(format!("{} instances with n ≤ 14, {secs:.1}s", small.len()))
}

/// Each instance's Shor and strengthened pairs, each shared by both
/// constructions, and the pipeline's own comparison.
fn dominance(cases: &[Case], comparisons: &[Result<bqpcut::pipeline::PenaltyComparison, String>]) -> Check {
    let budget = PipelineConfig::default().bound_budget;
    let errors: Vec<String> = par::map(Exec::Parallel, &cases.iter().collect::<Vec<_>>(), |c| {
        let mut errs = Vec::new();
        let pairs = [shor_bounds(&c.p, Exec::Sequential), strengthened_bounds(&c.p, &budget, Exec::Sequential)];
        for bp in &pairs {
            let las = lasserre_params(bp);
            // The strict inequality needs ε < 1; with ε = 1 it degrades to ≤
            // exactly when u = −ℓ.
            for eps in [0.5, default_epsilon(c.p.integer_objective, bp)] {
                let gw = gw_params(bp, eps).unwrap();
                let (rg, rl) = (gw.rho.unwrap(), las.rho.unwrap());
                if rg > rl {
                    errs.push(format!("{}: ρ_GW {rg} > ρ_Las {rl}", c.id));
                }
                let strict = eps < 1.0;
                if (strict && gw.sigma >= las.sigma) || gw.sigma > las.sigma {
                    errs.push(format!("{}: σ_GW {} vs σ_Las {} at ε = {eps}", c.id, gw.sigma, las.sigma));
                }
            }
        }
        errs
    })
    .into_iter()
    .flatten()
    .collect();
    ensure(errors.is_empty(), || format!("{} violations, first: {}", errors.len(), errors[0]))?;

    let mut cli = Vec::new();
    let mut gw = Vec::new();
    for (c, cmp) in cases.iter().zip(comparisons) {
        let cmp = cmp.as_ref().map_err(|e| format!("{}: {e}", c.id))?;
        ensure(cmp.cli.sigma <= cmp.las.sigma, || {
            format!("{}: σ_CLI {} > σ_Las {}", c.id, cmp.cli.sigma, cmp.las.sigma)
        })?;
        cli.push(cmp.cli.sigma / cmp.las.sigma);
        if let Some(g) = &cmp.gw {
            ensure(g.sigma <= cmp.las.sigma, || {
                format!("{}: σ_GW {} > σ_Las {}", c.id, g.sigma, cmp.las.sigma)
            })?;
            gw.push(g.sigma / cmp.las.sigma);
        }
    }
    let mean = |v: &[f64]| 100.0 * v.iter().sum::<f64>() / v.len().max(1) as f64;
    let (mc, mg) = (mean(&cli), mean(&gw));
    ensure(mc <= 100.0 && mg <= 100.0, || format!("mean ratios CLI {mc:.2}%, GW {mg:.2}%"))?;
    Ok(format!("{} instances, mean σ_CLI/σ_Las {mc:.2}%, σ_GW/σ_Las {mg:.2}%", cases.len()))
}

fn separation(
    cases: &[Case],
    comparisons: &[Result<bqpcut::pipeline::PenaltyComparison, String>],
    outcomes: &[Result<Outcome, String>],
) -> Check {
    let mut jobs: Vec<(&Case, PenaltyParameters)> = Vec::new();
    for ((c, cmp), o) in cases.iter().zip(comparisons).zip(outcomes) {
        if c.p.n() > 16 {
            continue;
        }
        if let Ok(cmp) = cmp {
            jobs.push((c, cmp.las.clone()));
            jobs.push((c, cmp.cli.clone()));
            jobs.extend(cmp.gw.clone().map(|g| (c, g)));
        }
        if let Ok(o) = o {
            jobs.extend(o.parameters_used.clone().filter(|pp| pp.rho.is_some()).map(|pp| (c, pp)));
        }
    }
    let failures: Vec<String> = par::map(Exec::Parallel, &jobs, |(c, pp)| {
        match validate_params(&c.p, pp, Exec::Sequential) {
            Ok(true) => None,
            Ok(false) => Some(format!("{}: {:?} ρ = {:?}, σ = {}", c.id, pp.mode, pp.rho, pp.sigma)),
            Err(e) => Some(format!("{}: {e}", c.id)),
        }
    })
    .into_iter()
    .flatten()
    .collect();
    ensure(failures.is_empty(), || format!("{} failures, first: {}", failures.len(), failures[0]))?;
    Ok(format!("{} (ρ, σ) pairs on n ≤ 16", jobs.len()))
}

fn random_graph(k: usize) -> MaxCutInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee + k as u64);
    let n = 2 + k % 19;
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = match k % 5 {
                0 => rng.random_range(0..=10) as f64,
                1 => -(rng.random_range(0..=10) as f64),
                2 => rng.random_range(-10..=10) as f64,
                3 => rng.random_range(-1.0..1.0),
                _ if rng.random_bool(0.3) => rng.random_range(-5..=5) as f64 * 0.25,
                _ => 0.0,
            };
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    MaxCutInstance::from_weights(w).unwrap()
}

fn maxcut_solver(cases: &[Case]) -> Check {
    let graphs: Vec<MaxCutInstance> = (0..100).map(random_graph).collect();
    let errors: Vec<String> = par::map_range(Exec::Parallel, graphs.len(), |k| {
        let g = &graphs[k];
        let (z, _) = brute_force_maxcut(g, Exec::Sequential).unwrap();
        let cfg = SolverConfig {
            exec: Exec::Sequential,
            ..Default::default()
        };
        let r = solve_maxcut(g, &cfg).unwrap();
        let tol = 1e-8 * (1.0 + z.abs());
        let got = r.best_cut.value;
        if r.status != MaxCutStatus::Optimal || (got - z).abs() > tol || (g.cut_value(&r.best_cut.xbar) - got).abs() > tol {
            Some(format!("graph {k} ({} vertices): solver {got} ({:?}), enumeration {z}", g.n_vertices(), r.status))
        } else {
            None
        }
    })
    .into_iter()
    .flatten()
    .collect();
    ensure(errors.is_empty(), || format!("{} mismatches, first: {}", errors.len(), errors[0]))?;

    // Threshold solves on penalized instances: the cutoff may only fire when
    // enumeration finds no feasible point.
    let small: Vec<&Case> = cases.iter().filter(|c| c.p.n() <= 16).step_by(3).collect();
    let fired: Vec<Result<bool, String>> = par::map(Exec::Parallel, &small, |c| {
        let bp = shor_bounds(&c.p, Exec::Sequential);
        let pp = gw_params(&bp, default_epsilon(c.p.integer_objective, &bp)).unwrap();
        let g = to_maxcut(&build_q(&c.p, pp.sigma).unwrap(), pp.rho);
        let cfg = SolverConfig {
            early_cutoff: g.rho_cutoff,
            exec: Exec::Sequential,
            ..Default::default()
        };
        let r = solve_maxcut(&g, &cfg).unwrap();
        let feasible = c.truth.status == SolutionStatus::Optimal;
        match r.status {
            MaxCutStatus::EarlyInfeasible if feasible => Err(format!("{}: early cutoff on a feasible instance", c.id)),
            MaxCutStatus::EarlyInfeasible => Ok(true),
            MaxCutStatus::Optimal => {
                let x = cut_to_assignment(&r.best_cut);
                if c.p.is_feasible(&x).unwrap() == feasible {
                    Ok(false)
                } else {
                    Err(format!("{}: minimizer feasibility disagrees with enumeration", c.id))
                }
            }
            MaxCutStatus::TimeLimit => Err(format!("{}: time limit without a limit set", c.id)),
        }
    });
    let mut early = 0;
    for f in fired {
        early += usize::from(f?);
    }
    Ok(format!(
        "100 graphs up to 20 vertices; {} threshold solves, {early} early cutoffs, all on infeasible instances",
        small.len()
    ))
}

fn all_points(n: usize) -> impl Iterator<Item = Vec<i8>> {
    (0u64..1 << n).map(move |mask| (0..n).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect())
}

fn burer(cases: &[Case]) -> Check {
    let small: Vec<&Case> = cases.iter().filter(|c| c.p.n() <= 12).collect();
    let counts: Vec<Result<usize, String>> = par::map(Exec::Parallel, &small, |c| {
        let mut count = 0;
        for x in all_points(c.p.n()) {
            let xa = AssignmentPm1::new(x).unwrap();
            if !c.p.is_feasible(&xa).unwrap() {
                continue;
            }
            count += 1;
            let (my, diag) = lifting_residuals(&c.p, &xa.to_dvector());
            if my > 1e-9 || diag > 1e-9 {
                return Err(format!("{}: ‖MY‖∞ = {my}, diagonal error {diag}", c.id));
            }
        }
        Ok(count)
    });
    let mut feasible_points = 0;
    for c in counts {
        feasible_points += c?;
    }
    let budget = PipelineConfig::default().bound_budget;
    let p = one_dim().to_plus_minus_one();
    match projected_upper_bound(&p, &budget, Exec::Sequential) {
        ProjectedBound::Bound(b) => ensure((b.u - 2.0).abs() <= 1e-6, || format!("u_Δ = {} on the 1-D example", b.u))?,
        ProjectedBound::Infeasible(c) => return Err(format!("1-D example declared infeasible: {}", c.reason)),
    }
    let bad = Bqp01Instance::new(
        DMatrix::zeros(1, 1),
        DVector::from_element(1, 2.0),
        DMatrix::from_element(1, 1, 2.0),
        DVector::from_element(1, 1.0),
    )
    .unwrap()
    .to_plus_minus_one();
    ensure(
        matches!(projected_upper_bound(&bad, &budget, Exec::Sequential), ProjectedBound::Infeasible(_)),
        || "no certificate for 2y = 1".into(),
    )?;
    Ok(format!(
        "{feasible_points} feasible points on {} instances; 1-D u_Δ = 2; 2y = 1 certified infeasible",
        small.len()
    ))
}

fn least_violation(cases: &[Case]) -> Check {
    let picked: Vec<&Case> = cases
        .iter()
        .filter(|c| c.p.n() <= 12 && c.truth.status == SolutionStatus::Infeasible)
        .take(30)
        .collect();
    ensure(picked.len() == 30, || format!("only {} infeasible instances with n ≤ 12", picked.len()))?;
    let cfg = PipelineConfig::default().with_exec(Exec::Sequential);
    let errors: Vec<String> = par::map(Exec::Parallel, &picked, |c| {
        let o = least_violated(&c.p01, &cfg).unwrap();
        let want = c.ex.min_residual.0;
        match o.solution.residual {
            Some(r) if o.solution.status == SolutionStatus::LeastViolated && r as f64 == want => None,
            r => Some(format!("{}: residual {r:?} ({:?}), enumeration {want}", c.id, o.solution.status)),
        }
    })
    .into_iter()
    .flatten()
    .collect();
    ensure(errors.is_empty(), || format!("{} mismatches, first: {}", errors.len(), errors[0]))?;
    Ok("30 infeasible instances, residuals match enumeration".into())
}

const PETERSEN: [(usize, usize); 15] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 4),
    (4, 0),
    (0, 5),
    (1, 6),
    (2, 7),
    (3, 8),
    (4, 9),
    (5, 7),
    (7, 9),
    (9, 6),
    (6, 8),
    (8, 5),
];

fn cardinality() -> Check {
    let adj = adjacency_from_edges(10, &PETERSEN);
    let mut instances: Vec<(String, Bqp01Instance)> = (1..=9)
        .map(|k| (format!("petersen-k{k}"), build_k_cluster(&adj, k).unwrap()))
        .collect();
    for s in 0..20u64 {
        let n = 6 + (s as usize % 9);
        let k = cbqp_default_ks(n)[s as usize % 2];
        instances.push((format!("cbqp-{s}"), random_cbqp(n, k, 10, 500 + s).unwrap()));
    }
    let cfg = PipelineConfig::default().with_exec(Exec::Sequential);
    let results: Vec<Result<Option<f64>, String>> = par::map(Exec::Parallel, &instances, |(id, p01)| {
        let truth = brute_force_solve(&p01.to_plus_minus_one(), Exec::Sequential).unwrap();
        let got = solve(p01, &cfg).map_err(|e| format!("{id}: {e}"))?.solution;
        if truth.status == got.status && truth.objective == got.objective {
            Ok(got.objective)
        } else {
            Err(format!("{id}: got {:?}/{:?}, enumeration {:?}/{:?}", got.status, got.objective, truth.status, truth.objective))
        }
    });
    let mut values = Vec::new();
    for r in results {
        values.push(r?);
    }
    // Densest 5-subgraph of the Petersen graph is a 5-cycle.
    ensure(values[4] == Some(-5.0), || format!("densest 5-subgraph {:?}", values[4]))?;
    Ok("Petersen k = 1..9 and 20 CBQP instances match; densest 5-subgraph has 5 edges".to_string())
}

fn determinism(cases: &[Case]) -> Check {
    for c in cases.iter().filter(|c| c.p.n() <= 14).step_by(17) {
        for (k, mode) in [ModeChoice::Auto, ModeChoice::Gw, ModeChoice::Las].into_iter().enumerate() {
            let mut cfg = PipelineConfig {
                penalty_mode: mode,
                ..Default::default()
            };
            cfg.solver.seed = 7 + k as u64;
            let a = solve(&c.p01, &cfg).unwrap().without_timings();
            let b = solve(&c.p01, &cfg).unwrap().without_timings();
            ensure(a == b, || format!("{} under {mode:?}: outcomes differ", c.id))?;
        }
    }
    let suite = SuiteSpec::from_json(
        r#"{
            "name": "determinism",
            "seed": 11,
            "instances": [
                {"id": "r1", "rgi": {"family": "One", "n": 10, "m": 2, "a_interval": [-3, 3], "f_interval": [-7, 7], "b_v": 0, "seed": 1}},
                {"id": "r2", "rgi": {"family": "Two", "n": 9, "m": 1, "a_interval": [0, 3], "f_interval": [-5, 5], "b_v": 10, "seed": 2}},
                {"id": "kc", "k_cluster": {"n": 10, "percent": 50, "k": 4, "seed": 3}},
                {"id": "cb", "cbqp": {"n": 9, "k": 3, "range": 10, "seed": 4}}
            ]
        }"#,
    )
    .map_err(|e| e.to_string())?;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        bench_run(&suite, d.path(), &PipelineConfig::default(), d.path()).map_err(|e| e.to_string())?;
    }
    for file in ["records.csv", "sigma_ratios.csv"] {
        let read = |i: usize| std::fs::read(dirs[i].path().join(file)).unwrap();
        ensure(read(0) == read(1), || format!("{file} differs between runs"))?;
    }
    Ok("repeated solves and bench CSVs are identical".into())
}

fn run(name: &str, failed: &mut Vec<String>, f: impl FnOnce() -> Check) {
    let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match verdict {
        Ok(detail) => println!("PASS  {name}: {detail}"),
        Err(detail) => {
            println!("FAIL  {name}: {detail}");
            failed.push(name.to_string());
        }
    }
}

fn main() {
    let mut failed = Vec::new();
    run("golden 1-D example", &mut failed, golden);

    let t = Instant::now();
    let cases = corpus();
    eprintln!("corpus of {} instances enumerated in {:.1}s", cases.len(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let outcomes: Vec<Result<Outcome, String>> = par::map_range(Exec::Parallel, cases.len(), |k| {
        let cfg = PipelineConfig {
            penalty_mode: mode_for(k),
            ..Default::default()
        }
        .with_exec(Exec::Sequential);
        solve(&cases[k].p01, &cfg).map_err(|e| e.to_string())
    });
    let oracle_secs = t.elapsed().as_secs_f64();
    run("oracle equivalence", &mut failed, || oracle(&cases, &outcomes, oracle_secs));
    run("bound sandwich", &mut failed, || sandwich(&cases));

    let cfg = PipelineConfig::default().with_exec(Exec::Sequential);
    let comparisons: Vec<_> = par::map(Exec::Parallel, &cases, |c| {
        compare_penalties(&c.p01, &cfg).map_err(|e| e.to_string())
    });
    run("parameter dominance", &mut failed, || dominance(&cases, &comparisons));
    run("threshold separation", &mut failed, || separation(&cases, &comparisons, &outcomes));
    run("max-cut solver", &mut failed, || maxcut_solver(&cases));
    run("lifted constraints and projected bound", &mut failed, || burer(&cases));
    run("least violation", &mut failed, || least_violation(&cases));
    run("k-cluster and CBQP", &mut failed, cardinality);
    run("determinism", &mut failed, || determinism(&cases));

    if !failed.is_empty() {
        println!("{} of 10 criteria failed: {}", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
