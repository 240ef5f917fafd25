//! Dense semidefinite programming.
//!
//! Problems have the form
//!
//! ```text
//! min/max ⟨C, X⟩  s.t.  ⟨Aᵢ, X⟩ = bᵢ,  ⟨Bⱼ, X⟩ ≥ gⱼ,  X ⪰ 0
//! ```
//!
//! and are solved by an infeasible-start primal-dual interior point method
//! ([`ipm`]). Bounds handed to the penalty constructions go through
//! [`SdpSolution::safe_bound`], which starts from a dual bound repaired for
//! dual infeasibility and then shifts it by the solve tolerance.

pub mod cutting;
pub mod cuts;
mod ipm;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cutting::{cutting_plane_loop, CutBudget, CuttingPlaneResult, PoolCut};
pub use cuts::{separate_five_clique, separate_triangle, CliqueCut, HeuristicParams};

/// Default upper limit on the matrix order.
pub const DEFAULT_DIM_CAP: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Lower,
    Upper,
}

/// Symmetric constraint data. Almost every constraint in this crate is a
/// rank-one `vvᵀ` (unit diagonals, clique inequalities, projected diagonals).
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintMatrix {
    RankOne(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl ConstraintMatrix {
    /// `eᵢeᵢᵀ`.
    pub fn unit(i: usize, dim: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        ConstraintMatrix::RankOne(v)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConstraintMatrix::RankOne(v) => v.len(),
            ConstraintMatrix::Dense(m) => m.nrows(),
        }
    }

    /// `⟨A, X⟩`.
    pub fn inner(&self, x: &DMatrix<f64>) -> f64 {
        match self {
            ConstraintMatrix::RankOne(v) => (v.transpose() * x * v)[0],
            ConstraintMatrix::Dense(a) => a.component_mul(x).sum(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            ConstraintMatrix::RankOne(v) => v * v.transpose(),
            ConstraintMatrix::Dense(a) => a.clone(),
        }
    }

    fn add_scaled_to(&self, target: &mut DMatrix<f64>, w: f64) {
        match self {
            ConstraintMatrix::RankOne(v) => target.ger(w, v, v, 1.0),
            ConstraintMatrix::Dense(a) => *target += a * w,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub dim: usize,
    pub objective: DMatrix<f64>,
    pub eq_constraints: Vec<(ConstraintMatrix, f64)>,
    /// `⟨Bⱼ, X⟩ ≥ gⱼ`.
    pub ineq_cuts: Vec<(ConstraintMatrix, f64)>,
    pub sense: Sense,
    /// A bound on `trace X` valid for every feasible `X`. Used to repair dual
    /// bounds when the dual iterate is slightly infeasible.
    pub trace_bound: Option<f64>,
}

impl SdpProblem {
    /// `opt ⟨C, X⟩  s.t.  diag(X) = e, X ⪰ 0`, which has `trace X = dim`.
    pub fn unit_diagonal(objective: DMatrix<f64>, sense: Sense) -> Self {
        let dim = objective.nrows();
        Self {
            dim,
            eq_constraints: (0..dim).map(|i| (ConstraintMatrix::unit(i, dim), 1.0)).collect(),
            ineq_cuts: Vec::new(),
            objective,
            sense,
            trace_bound: Some(dim as f64),
        }
    }

    fn validate(&self, cap: usize) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("SDP of order 0".into()));
        }
        if self.dim > cap {
            return Err(Error::TooLarge {
                what: "SDP order",
                value: self.dim,
                limit: cap,
            });
        }
        if self.objective.nrows() != self.dim || self.objective.ncols() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: self.objective.nrows(),
            });
        }
        let asym = (&self.objective - self.objective.transpose()).amax();
        if asym > 1e-9 * (1.0 + self.objective.amax()) {
            return Err(Error::NotSymmetric { deviation: asym });
        }
        for (a, _) in self.eq_constraints.iter().chain(&self.ineq_cuts) {
            if a.dim() != self.dim {
                return Err(Error::Dimension {
                    expected: self.dim,
                    got: a.dim(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Solved,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: DMatrix<f64>,
    /// Primal objective in the problem's own sense.
    pub value: f64,
    /// Dual objective in the problem's own sense.
    pub dual_value: f64,
    /// Dual bound after clipping cut multipliers to their sign and charging
    /// the most negative eigenvalue of the dual slack against `trace_bound`.
    /// A valid lower bound for `Min`, upper bound for `Max`.
    pub repaired_dual_bound: f64,
    /// Multipliers of the equality constraints.
    pub y: DVector<f64>,
    /// Multipliers of the cuts (nonnegative at optimality).
    pub cut_duals: DVector<f64>,
    pub status: SdpStatus,
    pub kkt_residuals: KktResiduals,
    pub iterations: usize,
    pub tol: f64,
    /// For `Infeasible`: multipliers `y` with `Σ yᵢAᵢ ⪯ 0` (up to the
    /// recorded slack) and `bᵀy > 0`.
    pub certificate: Option<DVector<f64>>,
}

impl SdpSolution {
    /// A bound shifted away from the optimum by `tol·(1 + |dual_value|)`.
    pub fn safe_bound(&self, direction: Direction) -> Result<f64> {
        if self.status != SdpStatus::Solved {
            return Err(Error::Sdp(format!("status {:?}", self.status)));
        }
        let delta = self.tol * (1.0 + self.dual_value.abs());
        let vals = [self.value, self.dual_value, self.repaired_dual_bound];
        Ok(match direction {
            Direction::Lower => vals.iter().copied().fold(f64::INFINITY, f64::min) - delta,
            Direction::Upper => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) + delta,
        })
    }

    /// Gram factor `V` with `X ≈ VVᵀ`, negative eigenvalues dropped.
    pub fn gram_factor(&self) -> DMatrix<f64> {
        gram_factor(&self.x)
    }
}

/// `V = U·diag(√λ₊)` from the eigendecomposition of a symmetric matrix.
pub fn gram_factor(x: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(x.clone());
    let mut v = eig.eigenvectors;
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        v.column_mut(j).scale_mut(s);
    }
    v
}

pub(crate) fn lambda_min(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub dim_cap: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 120,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }
}

/// Solves with default options and the given tolerance.
pub fn solve(p: &SdpProblem, tol: f64) -> Result<SdpSolution> {
    solve_with(p, &SdpOptions { tol, ..SdpOptions::default() })
}

pub fn solve_with(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    if !(opts.tol > 0.0 && opts.tol <= 1e-2) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {} outside (0, 1e-2]",
            opts.tol
        )));
    }
    p.validate(opts.dim_cap)?;

    // Equality rows that are linear combinations of others are dropped; an
    // inconsistent combination is an immediate infeasibility certificate.
    let presolved = if p.ineq_cuts.is_empty() {
        match presolve_equalities(p) {
            Presolve::Keep(rows) => Some(rows),
            Presolve::Inconsistent(y) => return Ok(infeasible_solution(p, opts, y)),
        }
    } else {
        None
    };

    let kept: Vec<usize> = presolved
        .clone()
        .unwrap_or_else(|| (0..p.eq_constraints.len()).collect());
    let std = ipm::StdForm::from_problem(p, &kept);
    let res = ipm::run(&std, opts);
    let mut y = DVector::zeros(p.eq_constraints.len());
    for (k, &i) in kept.iter().enumerate() {
        y[i] = res.y[k];
    }
    let cut_duals = DVector::from_iterator(
        p.ineq_cuts.len(),
        (0..p.ineq_cuts.len()).map(|j| res.y[kept.len() + j]),
    );

    let mut status = res.status;
    let mut certificate = None;
    if status != SdpStatus::Solved && res.primal_infeasibility > 10.0 * opts.tol {
        if let Some(cert) = phase_one_certificate(p, opts) {
            status = SdpStatus::Infeasible;
            certificate = Some(cert);
        }
    }

    let sign = match p.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let repaired = sign * repaired_min_bound(p, &y, &cut_duals);
    Ok(SdpSolution {
        x: res.x,
        value: sign * res.pobj,
        dual_value: sign * res.dobj,
        repaired_dual_bound: repaired,
        y,
        cut_duals,
        status,
        kkt_residuals: KktResiduals {
            primal: res.primal_infeasibility,
            dual: res.dual_infeasibility,
            gap: res.rel_gap,
        },
        iterations: res.iterations,
        tol: opts.tol,
        certificate,
    })
}

/// Lower bound on the min-form problem from arbitrary multipliers.
///
/// With `Z = C̃ − Σ yᵢAᵢ − Σ wⱼBⱼ` (min-form objective `C̃`, `wⱼ ≥ 0`) every
/// feasible `X` satisfies `⟨C̃, X⟩ ≥ bᵀy + gᵀw + λ_min(Z)·trace X`.
fn repaired_min_bound(p: &SdpProblem, y: &DVector<f64>, w: &DVector<f64>) -> f64 {
    let mut z = match p.sense {
        Sense::Min => p.objective.clone(),
        Sense::Max => -&p.objective,
    };
    let mut bound = 0.0;
    for ((a, b), &yi) in p.eq_constraints.iter().zip(y.iter()) {
        a.add_scaled_to(&mut z, -yi);
        bound += b * yi;
    }
    for ((a, g), &wj) in p.ineq_cuts.iter().zip(w.iter()) {
        let wj = wj.max(0.0);
        a.add_scaled_to(&mut z, -wj);
        bound += g * wj;
    }
    let lmin = lambda_min(&z);
    if lmin < 0.0 {
        if let Some(t) = p.trace_bound {
            bound += lmin * t;
        }
    }
    bound
}

enum Presolve {
    Keep(Vec<usize>),
    Inconsistent(DVector<f64>),
}

fn svec(a: &ConstraintMatrix, dim: usize) -> DVector<f64> {
    let d = a.to_dense();
    let mut out = DVector::zeros(dim * (dim + 1) / 2);
    let mut k = 0;
    let r2 = std::f64::consts::SQRT_2;
    for j in 0..dim {
        for i in 0..=j {
            out[k] = if i == j { d[(i, j)] } else { r2 * d[(i, j)] };
            k += 1;
        }
    }
    out
}

/// Greedy Gram–Schmidt selection of independent equality rows plus a
/// consistency check of the dropped ones.
fn presolve_equalities(p: &SdpProblem) -> Presolve {
    let m = p.eq_constraints.len();
    let len = p.dim * (p.dim + 1) / 2;
    if m == 0 || (len as f64) * (m as f64) > 4e6 {
        return Presolve::Keep((0..m).collect());
    }
    let rows: Vec<DVector<f64>> = p.eq_constraints.iter().map(|(a, _)| svec(a, p.dim)).collect();
    let scale = rows.iter().map(|r| r.norm()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-9 * scale;
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut q = r.clone();
        for _ in 0..2 {
            for bvec in &basis {
                let c = bvec.dot(&q);
                q.axpy(-c, bvec, 1.0);
            }
        }
        let nq = q.norm();
        if nq > tol {
            basis.push(q / nq);
            kept.push(i);
        } else {
            dropped.push(i);
        }
    }
    if dropped.is_empty() {
        return Presolve::Keep(kept);
    }
    // Express each dropped row through the kept rows: (A_K A_Kᵀ) w = A_K a_j.
    let k = kept.len();
    let bvec: Vec<f64> = p.eq_constraints.iter().map(|(_, b)| *b).collect();
    let bscale = 1.0 + bvec.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let gram = DMatrix::from_fn(k, k, |i, j| rows[kept[i]].dot(&rows[kept[j]]));
    let chol = if k > 0 { gram.clone().cholesky() } else { None };
    for &j in &dropped {
        let w = match (&chol, k) {
            (_, 0) => DVector::zeros(0),
            (Some(c), _) => {
                let rhs = DVector::from_fn(k, |i, _| rows[kept[i]].dot(&rows[j]));
                c.solve(&rhs)
            }
            (None, _) => return Presolve::Keep((0..m).collect()),
        };
        let implied: f64 = kept.iter().zip(w.iter()).map(|(&i, wi)| wi * bvec[i]).sum();
        let mismatch = bvec[j] - implied;
        if mismatch.abs() > 1e-7 * bscale * (1.0 + w.amax()) {
            let s = mismatch.signum();
            let mut y = DVector::zeros(m);
            y[j] = s;
            for (&i, wi) in kept.iter().zip(w.iter()) {
                y[i] = -s * wi;
            }
            return Presolve::Inconsistent(y);
        }
    }
    Presolve::Keep(kept)
}

fn infeasible_solution(p: &SdpProblem, opts: &SdpOptions, cert: DVector<f64>) -> SdpSolution {
    let (value, dual_value) = match p.sense {
        Sense::Min => (f64::INFINITY, f64::INFINITY),
        Sense::Max => (f64::NEG_INFINITY, f64::NEG_INFINITY),
    };
    SdpSolution {
        x: DMatrix::zeros(p.dim, p.dim),
        value,
        dual_value,
        repaired_dual_bound: dual_value,
        y: DVector::zeros(p.eq_constraints.len()),
        cut_duals: DVector::zeros(p.ineq_cuts.len()),
        status: SdpStatus::Infeasible,
        kkt_residuals: KktResiduals::default(),
        iterations: 0,
        tol: opts.tol,
        certificate: Some(cert),
    }
}

/// Solves `min Σ|rᵢ|` over `⟨Aᵢ,X⟩ + rᵢ = bᵢ`, `X ⪰ 0` and checks the dual
/// multipliers as a Farkas certificate. Requires a trace bound.
fn phase_one_certificate(p: &SdpProblem, opts: &SdpOptions) -> Option<DVector<f64>> {
    let t = p.trace_bound?;
    if !p.ineq_cuts.is_empty() {
        return None;
    }
    let kept: Vec<usize> = (0..p.eq_constraints.len()).collect();
    let std = ipm::StdForm::phase_one(p);
    let res = ipm::run(&std, opts);
    let y = DVector::from_iterator(kept.len(), res.y.iter().take(kept.len()).copied());
    let mut s = DMatrix::zeros(p.dim, p.dim);
    let mut by = 0.0;
    for ((a, b), &yi) in p.eq_constraints.iter().zip(y.iter()) {
        a.add_scaled_to(&mut s, yi);
        by += b * yi;
    }
    let lmax = -lambda_min(&(-&s));
    let slack = lmax.max(0.0) * t;
    if by > slack + 1e-7 * (1.0 + by.abs()) {
        Some(y)
    } else {
        None
    }
}
