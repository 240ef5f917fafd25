//! Threshold and penalty parameters.
//!
//! A pair `(ρ, σ)` is valid when every feasible point has `h(x) ≤ ρ` and every
//! infeasible one has `h(x) > ρ`, where `h(x) = f(x) + σ‖Ax − b‖²`. Because the
//! residual is a nonnegative integer, `σ > u* − ℓ*` and `ρ ≥ u*` suffice; every
//! construction below instantiates this with computable bounds `u ≥ u*`,
//! `ℓ ≤ ℓ*`.

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundPair, UScope};
use crate::error::{Error, Result};
use crate::model::{self, AssignmentPm1, BqpPm1Instance};
use crate::par::Exec;

/// Enumeration cap for [`validate_params`].
pub const VALIDATE_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyMode {
    Lasserre,
    Cli,
    Gw,
    FeasibleUpdate,
    LeastViolation,
    /// Constraints dropped because no feasible point can score above an
    /// infeasible one; `σ = 0`.
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParameters {
    /// Absent when infeasibility detection is not part of the construction.
    pub rho: Option<f64>,
    pub sigma: f64,
    pub epsilon: f64,
    pub mode: PenaltyMode,
    /// Bounds the pair was derived from; absent for the feasible update,
    /// which only needs a lower bound (kept in `ell_used`).
    pub source_bounds: Option<BoundPair>,
    pub ell_used: f64,
}

/// `ε = 1` for integer objective data, otherwise `1e-4·(1 + |u − ℓ|)` capped
/// at 1 so that `σ = u − ℓ + ε` never exceeds `2·max{|ℓ|, |u|} + 1`.
pub fn default_epsilon(integer_objective: bool, bp: &BoundPair) -> f64 {
    if integer_objective {
        1.0
    } else {
        (1e-4 * (1.0 + (bp.u - bp.ell).abs())).min(1.0)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")))
    }
}

/// `ρ = max{|ℓ|, |u|}`, `σ = 2ρ + 1`.
pub fn lasserre_params(bp: &BoundPair) -> PenaltyParameters {
    let r = bp.ell.abs().max(bp.u.abs());
    PenaltyParameters {
        rho: Some(r),
        sigma: 2.0 * r + 1.0,
        epsilon: 1.0,
        mode: PenaltyMode::Lasserre,
        source_bounds: Some(bp.clone()),
        ell_used: bp.ell,
    }
}

fn gap_params(bp: &BoundPair, epsilon: f64, mode: PenaltyMode) -> Result<PenaltyParameters> {
    check_epsilon(epsilon)?;
    let sigma = bp.u - bp.ell + epsilon;
    if sigma <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "u − ℓ + ε = {sigma} is not positive; the constraints can be dropped instead"
        )));
    }
    Ok(PenaltyParameters {
        rho: Some(bp.u),
        sigma,
        epsilon,
        mode,
        source_bounds: Some(bp.clone()),
        ell_used: bp.ell,
    })
}

/// `ρ = u`, `σ = u − ℓ + ε`.
pub fn gw_params(bp: &BoundPair, epsilon: f64) -> Result<PenaltyParameters> {
    gap_params(bp, epsilon, PenaltyMode::Gw)
}

/// `σ = ũ − ℓ̃ + ε` from hypercube bounds, paired with `ρ = ũ`.
pub fn cli_params(bp: &BoundPair, epsilon: f64) -> Result<PenaltyParameters> {
    gap_params(bp, epsilon, PenaltyMode::Cli)
}

/// `σ′ = f(x′) − ℓ + ε` for a known feasible `x′`. Since `f* ≤ f(x′)`, every
/// infeasible point scores above `f*` and the minimizer of `h` is feasible.
pub fn feasible_update(ell: f64, f_feasible: f64, epsilon: f64) -> Result<PenaltyParameters> {
    check_epsilon(epsilon)?;
    let sigma = f_feasible - ell + epsilon;
    if sigma <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "f(x′) = {f_feasible} is below the lower bound {ell} by more than ε"
        )));
    }
    Ok(PenaltyParameters {
        rho: None,
        sigma,
        epsilon,
        mode: PenaltyMode::FeasibleUpdate,
        source_bounds: None,
        ell_used: ell,
    })
}

/// [`feasible_update`] after checking `Ax′ = b`.
pub fn feasible_update_checked(
    p: &BqpPm1Instance,
    x: &AssignmentPm1,
    ell: f64,
    epsilon: f64,
) -> Result<PenaltyParameters> {
    if !p.is_feasible(x)? {
        return Err(Error::ParameterInvalid(format!(
            "x′ has residual {} and cannot seed the penalty update",
            p.residual(x)?
        )));
    }
    feasible_update(ell, p.objective(x)?, epsilon)
}

/// `σ = u − ℓ + ε` with `u` bounding `f` over the whole hypercube. Minimizers
/// of `h` then attain the least residual over `{−1,1}ⁿ`.
pub fn least_violation_params(bp: &BoundPair, epsilon: f64) -> Result<PenaltyParameters> {
    check_epsilon(epsilon)?;
    if bp.scope_u != UScope::OverHypercube {
        return Err(Error::InvalidArgument(
            "least-violation penalty needs an upper bound over the whole hypercube".into(),
        ));
    }
    let sigma = (bp.u - bp.ell + epsilon).max(epsilon);
    Ok(PenaltyParameters {
        rho: None,
        sigma,
        epsilon,
        mode: PenaltyMode::LeastViolation,
        source_bounds: Some(bp.clone()),
        ell_used: bp.ell,
    })
}

/// `σ = 0` for the unconstrained fast path.
pub fn dropped_params(bp: &BoundPair) -> PenaltyParameters {
    PenaltyParameters {
        rho: None,
        sigma: 0.0,
        epsilon: 0.0,
        mode: PenaltyMode::Dropped,
        source_bounds: Some(bp.clone()),
        ell_used: bp.ell,
    }
}

/// Checks the threshold property by enumeration: `h ≤ ρ` on `Δ`, `h > ρ` on
/// `Δᶜ`. Equality on an infeasible point counts as a failure.
pub fn validate_params(p: &BqpPm1Instance, pp: &PenaltyParameters, exec: Exec) -> Result<bool> {
    if p.n() > VALIDATE_CAP {
        return Err(Error::TooLarge {
            what: "n",
            value: p.n(),
            limit: VALIDATE_CAP,
        });
    }
    let rho = pp
        .rho
        .ok_or_else(|| Error::InvalidArgument(format!("{:?} parameters carry no threshold", pp.mode)))?;
    let sigma = pp.sigma;
    let tol = 1e-9 * (1.0 + rho.abs());
    model::scan(
        p,
        exec,
        || true,
        |ok: &mut bool, _x, f, r| {
            let r = model::snap(r);
            if r == 0.0 {
                *ok &= f <= rho + tol;
            } else {
                *ok &= f + sigma * r > rho + tol;
            }
        },
        |a, b| a && b,
    )
}
