//! Exact penalty reduction of linearly constrained binary quadratic programs
//! to max-cut.
//!
//! A problem
//!
//! ```text
//! min  yᵀF̂y + ĉᵀy   s.t.  Ây = b̂,  y ∈ {0,1}ⁿ
//! ```
//!
//! is rewritten over ±1 variables, its constraints are moved into the
//! objective as `σ‖Ax − b‖²`, and the resulting unconstrained problem is
//! solved as a max-cut on `n + 1` vertices. A threshold `ρ` paired with `σ`
//! separates feasible from infeasible points, so the max-cut optimum either
//! is the constrained optimum or certifies infeasibility.
//!
//! Module map:
//!
//! - [`model`]: problem encodings, objective and residual evaluation,
//!   enumeration oracle.
//! - [`sdp`]: dense primal-dual interior point SDP solver, triangle and
//!   5-clique separation, cutting-plane loop.
//! - [`bounds`]: lower/upper bounds from trivial norms, Shor relaxations,
//!   cut-strengthened relaxations and the null-space projected relaxation.
//! - [`penalty`]: `(ρ, σ)` constructions.
//! - [`maxcut`]: the `Q` matrix, adjacency and cut/assignment mappings.
//! - [`solver`]: max-cut branch-and-bound with hyperplane rounding.
//! - [`pipeline`]: end-to-end solve, least-violation mode.
//! - [`io`]: generators, file formats, export and the benchmark harness.

pub mod bounds;
pub mod error;
pub mod io;
pub mod maxcut;
pub mod model;
pub mod par;
pub mod penalty;
pub mod pipeline;
pub mod sdp;
pub mod solver;

pub use error::{Error, Result};
pub use model::{AssignmentPm1, Bqp01Instance, BqpPm1Instance, Solution, SolutionStatus};
