//! End-to-end solve: transform, bound, choose `(ρ, σ)`, reduce to max-cut,
//! solve, and read the answer back.
//!
//! In `Auto` mode a cheap penalty built from trivial bounds is used first to
//! look for a feasible point with the root relaxation and rounding. If one is
//! found, `σ′ = f(x′) − ℓ̃ + ε` makes the penalized minimizer feasible and no
//! threshold is needed; otherwise the problem is solved with `ρ = u_Δ` and
//! `σ = u_Δ − ℓ̃ + ε`, stopping early once the max-cut bound proves `Δ = ∅`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{
    projected_upper_bound, round_to_integers, shor_bounds, strengthened_bounds, strengthened_lower, trivial_bounds,
    BoundPair, ProjectedBound, BOUND_TOL,
};
use crate::error::{Error, Result};
use crate::maxcut::{build_q, cut_to_assignment, to_maxcut};
use crate::model::{brute_force_solve, AssignmentPm1, Bqp01Instance, BqpPm1Instance, Solution, SolutionStatus, SolveStats};
use crate::par::{self, Exec};
use crate::penalty::{
    cli_params, default_epsilon, dropped_params, feasible_update_checked, gw_params, lasserre_params,
    least_violation_params, PenaltyParameters,
};
use crate::sdp::CutBudget;
use crate::solver::{gw_round_and_improve, root_relaxation, solve_maxcut, MaxCutStatus, SolveReport, SolverConfig};

/// Largest `n` for which the optional enumeration cross-check runs.
pub const CROSSCHECK_CAP: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeChoice {
    /// `ρ = max{|ℓ̂|, |û|}`, `σ = 2ρ + 1` from Shor bounds.
    Las,
    /// `ρ = ũ`, `σ = ũ − ℓ̃ + ε` from cut-strengthened bounds.
    Cli,
    /// `ρ = u_Δ`, `σ = u_Δ − ℓ̃ + ε`.
    Gw,
    /// `Gw` preceded by the feasible-point heuristic.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub penalty_mode: ModeChoice,
    /// `None` picks [`default_epsilon`].
    pub epsilon: Option<f64>,
    pub solver: SolverConfig,
    /// Only consulted in `Auto` mode.
    pub enable_feasible_update: bool,
    pub least_violation: bool,
    pub brute_force_crosscheck: bool,
    pub bound_budget: CutBudget,
    pub exec: Exec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            penalty_mode: ModeChoice::Auto,
            epsilon: None,
            solver: SolverConfig::default(),
            enable_feasible_update: true,
            least_violation: false,
            brute_force_crosscheck: false,
            bound_budget: CutBudget {
                rounds: 6,
                per_round: 100,
                max_active: 400,
                tol: BOUND_TOL,
                ..CutBudget::default()
            },
            exec: Exec::default(),
        }
    }
}

impl PipelineConfig {
    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self.solver.exec = exec;
        self
    }
}

/// Why a problem was declared infeasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InfeasibilityEvidence {
    /// The projected relaxation has no feasible matrix.
    ProjectedCertificate { reason: String },
    /// The max-cut bound fell below `eᵀQe − ρ` during the search.
    EarlyCutoff { z_ub: f64, cutoff: f64 },
    /// The penalized optimum exceeds the threshold.
    ThresholdExceeded { h_star: f64, rho: f64 },
    /// Constraints were dropped and the unconstrained minimizer is infeasible.
    FastPathMinimizer,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub stages: Vec<(String, f64)>,
    pub events: Vec<String>,
}

impl Timeline {
    fn stage(&mut self, name: &str, since: Instant) {
        self.stages.push((name.to_string(), since.elapsed().as_secs_f64()));
    }

    fn event(&mut self, e: impl Into<String>) {
        let e = e.into();
        log::debug!("{e}");
        self.events.push(e);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub solution: Solution,
    pub parameters_used: Option<PenaltyParameters>,
    pub bounds_used: Option<BoundPair>,
    pub maxcut_report: Option<SolveReport>,
    /// `eᵀQe` of the max-cut instance behind `maxcut_report`.
    pub maxcut_constant: Option<f64>,
    pub infeasibility: Option<InfeasibilityEvidence>,
    pub timeline: Timeline,
}

impl Outcome {
    /// The same outcome with every wall-clock measurement zeroed, for
    /// comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut o = self.clone();
        o.solution.stats.seconds = 0.0;
        o.timeline.stages.iter_mut().for_each(|s| s.1 = 0.0);
        let zero = |b: &mut BoundPair| b.stats.seconds = 0.0;
        if let Some(b) = o.bounds_used.as_mut() {
            zero(b);
        }
        if let Some(b) = o.parameters_used.as_mut().and_then(|p| p.source_bounds.as_mut()) {
            zero(b);
        }
        o
    }
}

/// `u_Δ < ℓ̃` implies `u* < ℓ*`: every feasible point beats every infeasible
/// one, so the constraints can be ignored.
pub fn unconstrained_fast_path(bp_u: &BoundPair, bp_l: &BoundPair) -> bool {
    bp_u.u < bp_l.ell
}

fn epsilon_for(p: &BqpPm1Instance, cfg: &PipelineConfig, bp: &BoundPair) -> Result<f64> {
    match cfg.epsilon {
        Some(e) if e > 0.0 && e.is_finite() => Ok(e),
        Some(e) => Err(Error::InvalidArgument(format!("epsilon must be positive, got {e}"))),
        None => Ok(default_epsilon(p.integer_objective, bp)),
    }
}

fn tighten(p: &BqpPm1Instance, bp: BoundPair) -> BoundPair {
    if p.integer_objective {
        round_to_integers(&bp)
    } else {
        bp
    }
}

struct Run<'a> {
    p: &'a BqpPm1Instance,
    cfg: &'a PipelineConfig,
    start: Instant,
    timeline: Timeline,
}

struct CutSolve {
    report: SolveReport,
    constant: f64,
    x: AssignmentPm1,
}

impl Run<'_> {
    fn solver_config(&self, cutoff: Option<f64>) -> SolverConfig {
        let mut s = self.cfg.solver.clone();
        s.time_limit = s.time_limit.map(|t| (t - self.start.elapsed().as_secs_f64()).max(0.0));
        s.early_cutoff = cutoff;
        s
    }

    fn solve_penalized(&mut self, pp: &PenaltyParameters, use_cutoff: bool) -> Result<CutSolve> {
        let t = Instant::now();
        let g = to_maxcut(&build_q(self.p, pp.sigma)?, pp.rho);
        let cutoff = if use_cutoff { g.rho_cutoff } else { None };
        let report = solve_maxcut(&g, &self.solver_config(cutoff))?;
        self.timeline.stage("maxcut", t);
        self.timeline.event(format!(
            "{:?}: σ = {}, ρ = {:?}, max-cut {:?} after {} nodes, z ∈ [{}, {}]",
            pp.mode, pp.sigma, pp.rho, report.status, report.nodes, report.z_lb, report.z_ub
        ));
        let x = cut_to_assignment(&report.best_cut);
        Ok(CutSolve {
            constant: g.constant,
            x,
            report,
        })
    }

    fn finish(
        mut self,
        mut solution: Solution,
        params: Option<PenaltyParameters>,
        bounds: Option<BoundPair>,
        cut: Option<CutSolve>,
        infeasibility: Option<InfeasibilityEvidence>,
    ) -> Result<Outcome> {
        solution.stats.seconds = self.start.elapsed().as_secs_f64();
        if let Some(c) = &cut {
            solution.stats.nodes = c.report.nodes;
        }
        if self.cfg.brute_force_crosscheck {
            self.crosscheck(&solution)?;
        }
        self.timeline.stage("total", self.start);
        Ok(Outcome {
            solution,
            parameters_used: params,
            bounds_used: bounds,
            maxcut_constant: cut.as_ref().map(|c| c.constant),
            maxcut_report: cut.map(|c| c.report),
            infeasibility,
            timeline: self.timeline,
        })
    }

    fn crosscheck(&mut self, s: &Solution) -> Result<()> {
        if self.p.n() > CROSSCHECK_CAP {
            self.timeline.event(format!("cross-check skipped: n = {} > {CROSSCHECK_CAP}", self.p.n()));
            return Ok(());
        }
        if s.status == SolutionStatus::TimeLimit || s.status == SolutionStatus::LeastViolated {
            return Ok(());
        }
        let truth = brute_force_solve(self.p, self.cfg.exec)?;
        let same_objective = match (truth.objective, s.objective) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-8 * (1.0 + a.abs()),
            (None, None) => true,
            _ => false,
        };
        if truth.status != s.status || !same_objective {
            return Err(Error::ParameterInvalid(format!(
                "cross-check failed: solver {:?}/{:?}, enumeration {:?}/{:?}",
                s.status, s.objective, truth.status, truth.objective
            )));
        }
        self.timeline.event("cross-check passed");
        Ok(())
    }

    fn solution_from(&self, x: &AssignmentPm1, status: SolutionStatus) -> Result<Solution> {
        Ok(Solution {
            status,
            x01: Some(x.to_01()),
            objective: Some(self.p.objective(x)?),
            residual: Some(self.p.residual(x)?.round() as u64),
            stats: SolveStats::default(),
        })
    }

    fn infeasible() -> Solution {
        Solution {
            status: SolutionStatus::Infeasible,
            x01: None,
            objective: None,
            residual: None,
            stats: SolveStats::default(),
        }
    }

    /// Reads a threshold-based solve. The penalized minimizer is feasible iff
    /// `Δ ≠ ∅`.
    fn interpret(self, pp: PenaltyParameters, bounds: BoundPair, cut: CutSolve) -> Result<Outcome> {
        let rho = pp.rho.expect("threshold modes carry ρ");
        match cut.report.status {
            MaxCutStatus::EarlyInfeasible => {
                let ev = InfeasibilityEvidence::EarlyCutoff {
                    z_ub: cut.report.z_ub,
                    cutoff: cut.constant - rho,
                };
                self.finish(Self::infeasible(), Some(pp), Some(bounds), Some(cut), Some(ev))
            }
            MaxCutStatus::TimeLimit => {
                let feasible = self.p.is_feasible(&cut.x)?;
                let s = if feasible {
                    self.solution_from(&cut.x, SolutionStatus::TimeLimit)?
                } else {
                    Solution {
                        x01: None,
                        objective: None,
                        residual: None,
                        ..self.solution_from(&cut.x, SolutionStatus::TimeLimit)?
                    }
                };
                self.finish(s, Some(pp), Some(bounds), Some(cut), None)
            }
            MaxCutStatus::Optimal => {
                let h_star = cut.constant - cut.report.z_lb;
                if self.p.is_feasible(&cut.x)? {
                    if h_star > rho + 1e-9 * (1.0 + rho.abs()) {
                        log::warn!("feasible minimizer with h* = {h_star} above ρ = {rho}");
                    }
                    let s = self.solution_from(&cut.x, SolutionStatus::Optimal)?;
                    self.finish(s, Some(pp), Some(bounds), Some(cut), None)
                } else {
                    let ev = InfeasibilityEvidence::ThresholdExceeded { h_star, rho };
                    self.finish(Self::infeasible(), Some(pp), Some(bounds), Some(cut), Some(ev))
                }
            }
        }
    }

    /// Solves with `σ = 0`; the minimizer is feasible unless `Δ = ∅`.
    fn fast_path(mut self, bounds: BoundPair) -> Result<Outcome> {
        let pp = dropped_params(&bounds);
        let cut = self.solve_penalized(&pp, false)?;
        let complete = cut.report.status == MaxCutStatus::Optimal;
        if self.p.is_feasible(&cut.x)? {
            let status = if complete { SolutionStatus::Optimal } else { SolutionStatus::TimeLimit };
            let s = self.solution_from(&cut.x, status)?;
            self.finish(s, Some(pp), Some(bounds), Some(cut), None)
        } else if complete {
            self.finish(
                Self::infeasible(),
                Some(pp),
                Some(bounds),
                Some(cut),
                Some(InfeasibilityEvidence::FastPathMinimizer),
            )
        } else {
            let s = Solution {
                status: SolutionStatus::TimeLimit,
                ..Self::infeasible()
            };
            self.finish(s, Some(pp), Some(bounds), Some(cut), None)
        }
    }

    /// Solves with a `σ` for which the penalized minimizer is feasible.
    /// `known` is the feasible point `σ` was derived from; it stands in for
    /// the cut when the search stops early.
    fn solve_without_threshold(
        mut self,
        pp: PenaltyParameters,
        bounds: BoundPair,
        known: AssignmentPm1,
    ) -> Result<Outcome> {
        let cut = self.solve_penalized(&pp, false)?;
        let feasible = self.p.is_feasible(&cut.x)?;
        let s = match cut.report.status {
            MaxCutStatus::Optimal if feasible => self.solution_from(&cut.x, SolutionStatus::Optimal)?,
            MaxCutStatus::Optimal => {
                return Err(Error::ParameterInvalid(format!(
                    "penalized minimizer has residual {} although a feasible point was known",
                    self.p.residual(&cut.x)?
                )))
            }
            _ => {
                let x = if feasible && self.p.objective(&cut.x)? <= self.p.objective(&known)? {
                    &cut.x
                } else {
                    &known
                };
                self.solution_from(x, SolutionStatus::TimeLimit)?
            }
        };
        self.finish(s, Some(pp), Some(bounds), Some(cut), None)
    }

    /// Cheap penalty, root relaxation and rounding; returns a feasible point if
    /// the rounded cut encodes one.
    fn heuristic_point(&mut self) -> Result<Option<AssignmentPm1>> {
        let t = Instant::now();
        let triv = trivial_bounds(self.p);
        let eps = epsilon_for(self.p, self.cfg, &triv)?;
        let pp0 = gw_params(&triv, eps)?;
        let g0 = to_maxcut(&build_q(self.p, pp0.sigma)?, pp0.rho);
        let found = match root_relaxation(&g0, &self.cfg.solver.root_budget, self.cfg.exec) {
            Ok(r) => {
                let cut = gw_round_and_improve(&r.gram, &g0, self.cfg.solver.gw_trials, self.cfg.solver.seed);
                let x = cut_to_assignment(&cut);
                self.p.is_feasible(&x)?.then_some(x)
            }
            Err(e) => {
                self.timeline.event(format!("heuristic relaxation failed: {e}"));
                None
            }
        };
        self.timeline.stage("heuristic", t);
        self.timeline.event(format!(
            "heuristic with σ₀ = {}: {}",
            pp0.sigma,
            if found.is_some() { "feasible point found" } else { "no feasible point" }
        ));
        Ok(found)
    }
}

/// Solves a 0/1 problem; see the module docs for the strategy.
pub fn solve(p01: &Bqp01Instance, cfg: &PipelineConfig) -> Result<Outcome> {
    if cfg.least_violation {
        return least_violated(p01, cfg);
    }
    let p = p01.to_plus_minus_one();
    let mut run = Run {
        p: &p,
        cfg,
        start: Instant::now(),
        timeline: Timeline::default(),
    };
    let exec = cfg.exec;

    if p.m() == 0 {
        run.timeline.event("no constraints: solving the objective directly");
        return run.fast_path(trivial_bounds(&p));
    }

    match cfg.penalty_mode {
        ModeChoice::Las => {
            let t = Instant::now();
            let bp = tighten(&p, shor_bounds(&p, exec));
            run.timeline.stage("bounds", t);
            let pp = lasserre_params(&bp);
            let cut = run.solve_penalized(&pp, true)?;
            run.interpret(pp, bp, cut)
        }
        ModeChoice::Cli => {
            let t = Instant::now();
            let bp = tighten(&p, strengthened_bounds(&p, &cfg.bound_budget, exec));
            run.timeline.stage("bounds", t);
            let pp = cli_params(&bp, epsilon_for(&p, cfg, &bp)?)?;
            let cut = run.solve_penalized(&pp, true)?;
            run.interpret(pp, bp, cut)
        }
        ModeChoice::Gw | ModeChoice::Auto => {
            let t = Instant::now();
            let (lower, projected) = par::join(
                exec,
                || strengthened_lower(&p, &cfg.bound_budget, exec),
                || projected_upper_bound(&p, &cfg.bound_budget, exec),
            );
            run.timeline.stage("bounds", t);
            let upper = match projected {
                ProjectedBound::Infeasible(cert) => {
                    run.timeline.event(format!("projected relaxation certifies Δ = ∅: {}", cert.reason));
                    let ev = InfeasibilityEvidence::ProjectedCertificate { reason: cert.reason };
                    return run.finish(Run::infeasible(), None, Some(lower), None, Some(ev));
                }
                ProjectedBound::Bound(b) => b,
            };
            let bp = tighten(
                &p,
                BoundPair {
                    u: upper.u,
                    scope_u: upper.scope_u,
                    warning: upper.warning.or(lower.warning.clone()),
                    ..lower
                },
            );
            if unconstrained_fast_path(&bp, &bp) {
                run.timeline.event(format!("u_Δ = {} < ℓ̃ = {}: constraints dropped", bp.u, bp.ell));
                return run.fast_path(bp);
            }
            let eps = epsilon_for(&p, cfg, &bp)?;
            if cfg.penalty_mode == ModeChoice::Auto && cfg.enable_feasible_update {
                if let Some(x) = run.heuristic_point()? {
                    let pp = feasible_update_checked(&p, &x, bp.ell, eps)?;
                    return run.solve_without_threshold(pp, bp, x);
                }
            }
            let pp = gw_params(&bp, eps)?;
            let cut = run.solve_penalized(&pp, true)?;
            run.interpret(pp, bp, cut)
        }
    }
}

/// The `(ρ, σ)` pairs of the three bound-based constructions on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyComparison {
    pub las: PenaltyParameters,
    pub cli: PenaltyParameters,
    /// Absent when the projected relaxation proves `Δ = ∅` or `u_Δ < ℓ̃`.
    pub gw: Option<PenaltyParameters>,
}

/// Computes Shor, strengthened and projected bounds and the parameters each
/// construction derives from them, without solving.
pub fn compare_penalties(p01: &Bqp01Instance, cfg: &PipelineConfig) -> Result<PenaltyComparison> {
    let p = p01.to_plus_minus_one();
    let exec = cfg.exec;
    let (shor, strong) = par::join(
        exec,
        || shor_bounds(&p, exec),
        || strengthened_bounds(&p, &cfg.bound_budget, exec),
    );
    let (shor, strong) = (tighten(&p, shor), tighten(&p, strong));
    let las = lasserre_params(&shor);
    let cli = cli_params(&strong, epsilon_for(&p, cfg, &strong)?)?;
    let gw = match projected_upper_bound(&p, &cfg.bound_budget, exec) {
        ProjectedBound::Infeasible(_) => None,
        ProjectedBound::Bound(b) => {
            let bp = tighten(
                &p,
                BoundPair {
                    u: b.u,
                    scope_u: b.scope_u,
                    ..strong.clone()
                },
            );
            if unconstrained_fast_path(&bp, &bp) {
                None
            } else {
                Some(gw_params(&bp, epsilon_for(&p, cfg, &bp)?)?)
            }
        }
    };
    Ok(PenaltyComparison { las, cli, gw })
}

/// Solves `min f` over the hypercube with the constraints dropped, as licensed
/// by [`unconstrained_fast_path`] on `bounds`. Reports `Infeasible` when the
/// unconstrained minimizer violates `Ax = b`, which under that premise means
/// `Δ = ∅`.
pub fn solve_dropping_constraints(p01: &Bqp01Instance, cfg: &PipelineConfig, bounds: BoundPair) -> Result<Outcome> {
    let p = p01.to_plus_minus_one();
    let run = Run {
        p: &p,
        cfg,
        start: Instant::now(),
        timeline: Timeline::default(),
    };
    run.fast_path(bounds)
}

/// Minimizes `h` with a `σ` large enough that the minimizer has the smallest
/// residual over the hypercube; reports it as `LeastViolated` unless that
/// residual is zero.
pub fn least_violated(p01: &Bqp01Instance, cfg: &PipelineConfig) -> Result<Outcome> {
    let p = p01.to_plus_minus_one();
    let mut run = Run {
        p: &p,
        cfg,
        start: Instant::now(),
        timeline: Timeline::default(),
    };
    let t = Instant::now();
    // Shor bounds hold over the whole hypercube, as the construction needs.
    let bp = tighten(&p, shor_bounds(&p, cfg.exec));
    run.timeline.stage("bounds", t);
    let pp = least_violation_params(&bp, epsilon_for(&p, cfg, &bp)?)?;
    let cut = run.solve_penalized(&pp, false)?;
    let status = match (cut.report.status, p.is_feasible(&cut.x)?) {
        (MaxCutStatus::Optimal, true) => SolutionStatus::Optimal,
        (MaxCutStatus::Optimal, false) => SolutionStatus::LeastViolated,
        _ => SolutionStatus::TimeLimit,
    };
    let s = run.solution_from(&cut.x, status)?;
    run.finish(s, Some(pp), Some(bp), Some(cut), None)
}
