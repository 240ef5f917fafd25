//! Bounds on `ℓ* = min{f(x) | x ∈ Δᶜ}` and `u* = max{f(x) | x ∈ Δ}`.
//!
//! All relaxations work on `Y = [1; x][1; x]ᵀ` with `diag(Y) = e` and the
//! homogenized objective `F′`, so `f(x) = ⟨F′, Y⟩`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BqpPm1Instance;
use crate::par::{self, Exec};
use crate::sdp::{
    self, cutting_plane_loop, ConstraintMatrix, CutBudget, Direction, SdpOptions, SdpProblem, SdpStatus, Sense,
};

/// Tolerance for the SDP solves behind every bound.
pub const BOUND_TOL: f64 = 1e-9;
/// Singular values below this fraction of the largest count as zero.
pub const NULL_SPACE_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EllScope {
    /// Valid for `ℓ*` only.
    OverComplement,
    /// Lower bound on `f` over the whole hypercube, hence on `ℓ*`.
    OverHypercube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UScope {
    /// Valid for `u*` only.
    OverFeasible,
    /// Upper bound on `f` over the whole hypercube, hence on `u*`.
    OverHypercube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Trivial,
    Shor,
    ShorPlusCuts,
    Projected,
    /// Exact values from enumeration (tests and small instances).
    Exact,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundStats {
    pub seconds: f64,
    pub sdp_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub ell: f64,
    pub u: f64,
    pub scope_ell: EllScope,
    pub scope_u: UScope,
    pub provenance: Provenance,
    /// Set when an SDP failed and a weaker fallback was used.
    pub warning: Option<String>,
    pub stats: BoundStats,
}

impl BoundPair {
    pub fn exact(ell: f64, u: f64) -> Self {
        Self {
            ell,
            u,
            scope_ell: EllScope::OverComplement,
            scope_u: UScope::OverFeasible,
            provenance: Provenance::Exact,
            warning: None,
            stats: BoundStats::default(),
        }
    }
}

/// `ℓ = α − Σ|Fᵢⱼ| − Σ|cᵢ|`, `u = α + Σ|Fᵢⱼ| + Σ|cᵢ|`.
pub fn trivial_bounds(p: &BqpPm1Instance) -> BoundPair {
    let spread = p.f.iter().map(|v| v.abs()).sum::<f64>() + p.c.iter().map(|v| v.abs()).sum::<f64>();
    BoundPair {
        ell: p.alpha - spread,
        u: p.alpha + spread,
        scope_ell: EllScope::OverHypercube,
        scope_u: UScope::OverHypercube,
        provenance: Provenance::Trivial,
        warning: None,
        stats: BoundStats::default(),
    }
}

/// `opt ⟨F′, Y⟩  s.t.  Y ⪰ 0, diag(Y) = e`.
pub fn shor_problem(p: &BqpPm1Instance, sense: Sense) -> SdpProblem {
    SdpProblem::unit_diagonal(p.homogenized_objective(), sense)
}

fn with_fallback(p: &BqpPm1Instance, start: Instant, err: Error) -> BoundPair {
    log::warn!("bound computation fell back to trivial bounds: {err}");
    let mut t = trivial_bounds(p);
    t.warning = Some(err.to_string());
    t.stats.seconds = start.elapsed().as_secs_f64();
    t
}

/// One side of the cutting-plane relaxation: `(bound, SDP iterations)`.
pub fn relaxation_bound(p: &BqpPm1Instance, sense: Sense, budget: &CutBudget, exec: Exec) -> Result<(f64, usize)> {
    let r = cutting_plane_loop(&shor_problem(p, sense), budget, Vec::new(), exec)?;
    Ok((r.bound, r.sdp_iterations))
}

/// Shor bounds `ℓ̂` and `û`, safe-shifted. Both solves run concurrently when
/// allowed.
pub fn shor_bounds(p: &BqpPm1Instance, exec: Exec) -> BoundPair {
    let budget = CutBudget {
        tol: BOUND_TOL,
        ..CutBudget::none()
    };
    relaxed_pair(p, &budget, Provenance::Shor, exec)
}

/// `ℓ̃` and `ũ`: Shor plus triangle and 5-clique cuts.
pub fn strengthened_bounds(p: &BqpPm1Instance, budget: &CutBudget, exec: Exec) -> BoundPair {
    relaxed_pair(p, budget, Provenance::ShorPlusCuts, exec)
}

fn relaxed_pair(p: &BqpPm1Instance, budget: &CutBudget, provenance: Provenance, exec: Exec) -> BoundPair {
    let start = Instant::now();
    let (lo, hi) = par::join(
        exec,
        || relaxation_bound(p, Sense::Min, budget, exec),
        || relaxation_bound(p, Sense::Max, budget, exec),
    );
    match (lo, hi) {
        (Ok((ell, i1)), Ok((u, i2))) => BoundPair {
            ell,
            u,
            scope_ell: EllScope::OverHypercube,
            scope_u: UScope::OverHypercube,
            provenance,
            warning: None,
            stats: BoundStats {
                seconds: start.elapsed().as_secs_f64(),
                sdp_iterations: i1 + i2,
            },
        },
        (Err(e), _) | (_, Err(e)) => with_fallback(p, start, e),
    }
}

/// Lower bound from one cutting-plane solve, falling back to the trivial one.
pub fn strengthened_lower(p: &BqpPm1Instance, budget: &CutBudget, exec: Exec) -> BoundPair {
    let start = Instant::now();
    let trivial = trivial_bounds(p);
    match relaxation_bound(p, Sense::Min, budget, exec) {
        Ok((ell, iters)) => BoundPair {
            ell,
            provenance: Provenance::ShorPlusCuts,
            stats: BoundStats {
                seconds: start.elapsed().as_secs_f64(),
                sdp_iterations: iters,
            },
            ..trivial
        },
        Err(e) => with_fallback(p, start, e),
    }
}

/// When `f` takes integer values on `{−1,1}ⁿ`, so do `ℓ*` and `u*`, and the
/// bounds can be rounded inward. A small slack guards against solver noise
/// on bounds that are integers already.
pub fn round_to_integers(bp: &BoundPair) -> BoundPair {
    let slack = |v: f64| 1e-6 * (1.0 + v.abs());
    BoundPair {
        ell: (bp.ell - slack(bp.ell)).ceil(),
        u: (bp.u + slack(bp.u)).floor(),
        ..bp.clone()
    }
}

/// `max f` over the whole hypercube bounded by the Shor relaxation.
pub fn hypercube_upper_bound(p: &BqpPm1Instance, exec: Exec) -> f64 {
    match relaxation_bound(p, Sense::Max, &CutBudget::none(), exec) {
        Ok((u, _)) => u,
        Err(e) => {
            log::warn!("hypercube upper bound fell back to the trivial bound: {e}");
            trivial_bounds(p).u
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullSpaceBasis {
    /// `(n+1) × (n+1−rank)` with orthonormal columns.
    pub n: DMatrix<f64>,
    pub rank_m: usize,
    pub tol_used: f64,
}

/// `M = [b, −A]`.
pub fn constraint_matrix(a: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let mut out = DMatrix::zeros(m, n + 1);
    out.column_mut(0).copy_from(b);
    out.view_mut((0, 1), (m, n)).copy_from(&(-a));
    out
}

/// Orthonormal basis of `ns([b, −A])` from a full SVD.
pub fn null_space_basis(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> NullSpaceBasis {
    let m_mat = constraint_matrix(a, b);
    let cols = m_mat.ncols();
    let smax = if m_mat.nrows() == 0 { 0.0 } else { m_mat.amax() };
    if smax == 0.0 {
        return NullSpaceBasis {
            n: DMatrix::identity(cols, cols),
            rank_m: 0,
            tol_used: tol,
        };
    }
    // Pad to a square matrix so the SVD returns all right singular vectors.
    let rows = m_mat.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), m_mat.shape()).copy_from(&m_mat);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let sigma = &svd.singular_values;
    let cutoff = tol * sigma.max();
    let null_rows: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] <= cutoff).collect();
    let rank_m = cols - null_rows.len();
    let n = DMatrix::from_fn(cols, null_rows.len(), |i, j| vt[(null_rows[j], i)]);
    NullSpaceBasis {
        n,
        rank_m,
        tol_used: tol,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibleCertificate {
    pub reason: String,
    /// Farkas multipliers on the projected diagonal constraints, if the SDP
    /// solver produced them.
    pub multipliers: Option<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProjectedBound {
    Bound(BoundPair),
    Infeasible(InfeasibleCertificate),
}

/// `max ⟨NᵀF′N, P⟩  s.t.  ⟨NⱼᵀNⱼ, P⟩ = 1 (j = 0..n), P ⪰ 0`, where `Nⱼ` is row `j`
/// of a null-space basis of `[b, −A]`. Infeasibility of this SDP proves
/// `Δ = ∅`. The lower bound in the returned pair is the trivial one.
pub fn projected_upper_bound(p: &BqpPm1Instance, fallback: &CutBudget, exec: Exec) -> ProjectedBound {
    let start = Instant::now();
    let basis = null_space_basis(&p.a, &p.b, NULL_SPACE_RANK_TOL);
    let dim = basis.n.ncols();
    if dim == 0 {
        return ProjectedBound::Infeasible(InfeasibleCertificate {
            reason: "[b, −A] has full column rank; no Y with Y₀₀ = 1 satisfies MY = 0".into(),
            multipliers: None,
        });
    }
    let fp = p.homogenized_objective();
    let objective = basis.n.transpose() * fp * &basis.n;
    let objective = (&objective + objective.transpose()) * 0.5;
    let rows = basis.n.nrows();
    let problem = SdpProblem {
        dim,
        objective,
        eq_constraints: (0..rows)
            .map(|j| (ConstraintMatrix::RankOne(basis.n.row(j).transpose()), 1.0))
            .collect(),
        ineq_cuts: Vec::new(),
        sense: Sense::Max,
        trace_bound: Some(rows as f64),
    };
    let sol = sdp::solve_with(
        &problem,
        &SdpOptions {
            tol: BOUND_TOL,
            ..SdpOptions::default()
        },
    );
    let trivial = trivial_bounds(p);
    let pair = |u: f64, warning: Option<String>, iters: usize| BoundPair {
        ell: trivial.ell,
        u,
        scope_ell: EllScope::OverHypercube,
        scope_u: UScope::OverFeasible,
        provenance: Provenance::Projected,
        warning,
        stats: BoundStats {
            seconds: start.elapsed().as_secs_f64(),
            sdp_iterations: iters,
        },
    };
    match sol {
        Ok(s) if s.status == SdpStatus::Infeasible => ProjectedBound::Infeasible(InfeasibleCertificate {
            reason: "projected relaxation is infeasible".into(),
            multipliers: s.certificate,
        }),
        Ok(s) if s.status == SdpStatus::Solved => {
            let u = s.safe_bound(Direction::Upper).expect("solved");
            ProjectedBound::Bound(pair(u, None, s.iterations))
        }
        other => {
            let msg = match other {
                Ok(s) => format!("projected SDP ended with {:?}", s.status),
                Err(e) => e.to_string(),
            };
            log::warn!("{msg}; using the strengthened upper bound instead");
            let fb = strengthened_bounds(p, fallback, exec);
            ProjectedBound::Bound(BoundPair {
                scope_u: UScope::OverHypercube,
                provenance: fb.provenance,
                ..pair(fb.u, Some(msg), 0)
            })
        }
    }
}

/// For `x ∈ Δ` and `Y = [1; x][1; x]ᵀ`: `(‖MY‖∞, ‖diag(AXAᵀ) − b∘b‖∞)`, both
/// zero when the lifted equality constraints hold.
pub fn lifting_residuals(p: &BqpPm1Instance, x: &DVector<f64>) -> (f64, f64) {
    let n = p.n();
    let mut xbar = DVector::zeros(n + 1);
    xbar[0] = 1.0;
    xbar.rows_mut(1, n).copy_from(x);
    let y = &xbar * xbar.transpose();
    let my = constraint_matrix(&p.a, &p.b) * &y;
    let xx = x * x.transpose();
    let axa = &p.a * xx * p.a.transpose();
    let diag_err = (0..p.m())
        .map(|i| (axa[(i, i)] - p.b[i] * p.b[i]).abs())
        .fold(0.0, f64::max);
    (if my.is_empty() { 0.0 } else { my.amax() }, diag_err)
}
