//! Problem encodings and exact evaluation.
//!
//! [`Bqp01Instance`] is the user-facing 0/1 problem. [`BqpPm1Instance`] is the
//! same problem after the substitution `x = 2y − e`, which maps `{0,1}ⁿ` onto
//! `{−1,1}ⁿ` and keeps `Ây − b̂ = Ax − b` integral.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Exec};

/// Asymmetry below this is repaired by averaging with the transpose.
pub const SYMMETRY_REPAIR_TOL: f64 = 1e-9;
/// Integer-valued entries are accepted within this distance of an integer.
pub const INTEGRALITY_TOL: f64 = 1e-9;
/// Hard cap on the enumeration oracle.
pub const BRUTE_FORCE_CAP: usize = 25;

/// `min yᵀF̂y + ĉᵀy  s.t.  Ây = b̂, y ∈ {0,1}ⁿ` with integer `Â`, `b̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bqp01Instance {
    f_hat: DMatrix<f64>,
    c_hat: DVector<f64>,
    a_hat: DMatrix<f64>,
    b_hat: DVector<f64>,
}

impl Bqp01Instance {
    /// Validates and builds an instance. `a_hat` is `m × n`; pass a `0 × n`
    /// matrix for an unconstrained problem.
    pub fn new(
        f_hat: DMatrix<f64>,
        c_hat: DVector<f64>,
        a_hat: DMatrix<f64>,
        b_hat: DVector<f64>,
    ) -> Result<Self> {
        let n = c_hat.len();
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if f_hat.nrows() != n || f_hat.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: f_hat.nrows().max(f_hat.ncols()),
            });
        }
        if a_hat.ncols() != n && a_hat.nrows() > 0 {
            return Err(Error::Dimension {
                expected: n,
                got: a_hat.ncols(),
            });
        }
        if a_hat.nrows() != b_hat.len() {
            return Err(Error::Dimension {
                expected: a_hat.nrows(),
                got: b_hat.len(),
            });
        }
        let f_hat = symmetrize(f_hat)?;
        for ((r, c), v) in index_iter(&a_hat) {
            if !is_integral(v) {
                return Err(Error::NotInteger {
                    what: "A_hat",
                    index: format!("({r}, {c})"),
                    value: v,
                });
            }
        }
        for (i, &v) in b_hat.iter().enumerate() {
            if !is_integral(v) {
                return Err(Error::NotInteger {
                    what: "b_hat",
                    index: i.to_string(),
                    value: v,
                });
            }
        }
        let a_hat = a_hat.map(f64::round);
        let a_hat = if a_hat.nrows() == 0 {
            DMatrix::zeros(0, n)
        } else {
            a_hat
        };
        let b_hat = b_hat.map(f64::round);
        Ok(Self {
            f_hat,
            c_hat,
            a_hat,
            b_hat,
        })
    }

    pub fn n(&self) -> usize {
        self.c_hat.len()
    }

    pub fn m(&self) -> usize {
        self.b_hat.len()
    }

    pub fn f_hat(&self) -> &DMatrix<f64> {
        &self.f_hat
    }

    pub fn c_hat(&self) -> &DVector<f64> {
        &self.c_hat
    }

    pub fn a_hat(&self) -> &DMatrix<f64> {
        &self.a_hat
    }

    pub fn b_hat(&self) -> &DVector<f64> {
        &self.b_hat
    }

    /// True when the objective data is integer valued as well.
    pub fn has_integer_objective(&self) -> bool {
        self.f_hat.iter().chain(self.c_hat.iter()).all(|&v| is_integral(v))
    }

    /// `yᵀF̂y + ĉᵀy`.
    pub fn objective01(&self, y: &[u8]) -> Result<f64> {
        check_dim(self.n(), y.len())?;
        let yv = DVector::from_iterator(y.len(), y.iter().map(|&v| f64::from(v)));
        Ok((yv.transpose() * &self.f_hat * &yv)[0] + self.c_hat.dot(&yv))
    }

    /// `‖Ây − b̂‖²`.
    pub fn residual01(&self, y: &[u8]) -> Result<f64> {
        check_dim(self.n(), y.len())?;
        let yv = DVector::from_iterator(y.len(), y.iter().map(|&v| f64::from(v)));
        Ok((&self.a_hat * yv - &self.b_hat).norm_squared())
    }

    /// Substitutes `x = 2y − e`.
    pub fn to_plus_minus_one(&self) -> BqpPm1Instance {
        let n = self.n();
        let e = DVector::from_element(n, 1.0);
        let a = &self.a_hat * 0.5;
        let b = &self.b_hat - &self.a_hat * &e * 0.5;
        let c = (&self.c_hat + &self.f_hat * &e) * 0.5;
        let f = &self.f_hat * 0.25;
        let alpha = 0.5 * self.c_hat.sum() + 0.25 * self.f_hat.sum();
        BqpPm1Instance {
            f,
            c,
            a,
            b,
            alpha,
            integer_objective: self.has_integer_objective(),
        }
    }
}

/// `min xᵀFx + cᵀx + α  s.t.  Ax = b, x ∈ {−1,1}ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BqpPm1Instance {
    pub f: DMatrix<f64>,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub alpha: f64,
    /// Source objective data was integer valued.
    pub integer_objective: bool,
}

/// Shorthand for [`Bqp01Instance::to_plus_minus_one`].
pub fn to_plus_minus_one(p: &Bqp01Instance) -> BqpPm1Instance {
    p.to_plus_minus_one()
}

impl BqpPm1Instance {
    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// `f(x) = xᵀFx + cᵀx + α`.
    pub fn objective(&self, x: &AssignmentPm1) -> Result<f64> {
        check_dim(self.n(), x.len())?;
        let xv = x.to_dvector();
        Ok((xv.transpose() * &self.f * &xv)[0] + self.c.dot(&xv) + self.alpha)
    }

    /// `‖Ax − b‖²`, snapped to the nearest integer when within
    /// [`INTEGRALITY_TOL`] of it.
    pub fn residual(&self, x: &AssignmentPm1) -> Result<f64> {
        check_dim(self.n(), x.len())?;
        if self.m() == 0 {
            return Ok(0.0);
        }
        let xv = x.to_dvector();
        Ok(snap((&self.a * xv - &self.b).norm_squared()))
    }

    /// `h(x) = f(x) + σ‖Ax − b‖²`.
    pub fn penalized_objective(&self, sigma: f64, x: &AssignmentPm1) -> Result<f64> {
        if sigma.is_nan() || sigma < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "penalty must be nonnegative, got {sigma}"
            )));
        }
        Ok(self.objective(x)? + sigma * self.residual(x)?)
    }

    pub fn is_feasible(&self, x: &AssignmentPm1) -> Result<bool> {
        Ok(self.residual(x)? == 0.0)
    }

    /// `F′ = [[α, cᵀ/2], [c/2, F]]`, so that `f(x) = x̄ᵀF′x̄` with `x̄ = [1; x]`.
    pub fn homogenized_objective(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut fp = DMatrix::zeros(n + 1, n + 1);
        fp[(0, 0)] = self.alpha;
        for i in 0..n {
            fp[(0, i + 1)] = 0.5 * self.c[i];
            fp[(i + 1, 0)] = 0.5 * self.c[i];
        }
        fp.view_mut((1, 1), (n, n)).copy_from(&self.f);
        fp
    }
}

/// A point of `{−1,1}ⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct AssignmentPm1(Vec<i8>);

impl AssignmentPm1 {
    pub fn new(x: Vec<i8>) -> Result<Self> {
        if let Some(i) = x.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidArgument(format!(
                "entry {i} of a ±1 assignment is {}",
                x[i]
            )));
        }
        Ok(Self(x))
    }

    pub fn from_01(y: &[u8]) -> Result<Self> {
        Self::new(
            y.iter()
                .map(|&v| match v {
                    0 => Ok(-1),
                    1 => Ok(1),
                    other => Err(Error::InvalidArgument(format!("0/1 entry is {other}"))),
                })
                .collect::<Result<_>>()?,
        )
    }

    pub fn to_01(&self) -> Vec<u8> {
        self.0.iter().map(|&v| u8::from(v > 0)).collect()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_iterator(self.0.len(), self.0.iter().map(|&v| f64::from(v)))
    }
}

impl TryFrom<Vec<i8>> for AssignmentPm1 {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AssignmentPm1> for Vec<i8> {
    fn from(a: AssignmentPm1) -> Self {
        a.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionStatus {
    Optimal,
    Infeasible,
    LeastViolated,
    TimeLimit,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolutionStatus,
    /// Best 0/1 point; absent for infeasible problems.
    pub x01: Option<Vec<u8>>,
    /// `f` at `x01`, which is `f*` for optimal solutions.
    pub objective: Option<f64>,
    /// `‖Ax − b‖²` of `x01`.
    pub residual: Option<u64>,
    pub stats: SolveStats,
}

/// Extreme values of `f` over the hypercube, split by feasibility.
#[derive(Debug, Clone, PartialEq)]
pub struct Extremes {
    /// `f* = min f over Δ` with its lexicographically smallest minimizer.
    pub feasible_min: Option<(f64, AssignmentPm1)>,
    /// `u* = max f over Δ`.
    pub u_star: Option<f64>,
    /// `ℓ* = min f over Δᶜ`.
    pub ell_star: Option<f64>,
    pub hypercube_min: f64,
    pub hypercube_max: f64,
    /// Smallest `‖Ax − b‖²` over the hypercube with its smallest minimizer.
    pub min_residual: (f64, AssignmentPm1),
    pub feasible_count: u64,
}

/// Enumerates `{−1,1}ⁿ` and returns the extreme values of `f` over `Δ`,
/// `Δᶜ` and the whole hypercube.
pub fn enumerate_extremes(p: &BqpPm1Instance, exec: Exec) -> Result<Extremes> {
    let acc = scan(p, exec, Acc::default, Acc::visit, Acc::merge)?;
    let mut out = Extremes {
        feasible_min: acc.feas_min.map(|(_, x)| {
            let x = AssignmentPm1(x);
            (p.objective(&x).expect("dimension checked"), x)
        }),
        u_star: acc.feas_max,
        ell_star: acc.infeas_min,
        hypercube_min: acc.all_min,
        hypercube_max: acc.all_max,
        min_residual: (acc.res_min.0, AssignmentPm1(acc.res_min.1)),
        feasible_count: acc.feasible,
    };
    out.min_residual.0 = snap(out.min_residual.0);
    Ok(out)
}

/// Exact minimum of `f` over `Δ` by enumeration.
pub fn brute_force_solve(p: &BqpPm1Instance, exec: Exec) -> Result<Solution> {
    let start = std::time::Instant::now();
    let ex = enumerate_extremes(p, exec)?;
    let stats = SolveStats {
        nodes: 1u64 << p.n(),
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(match ex.feasible_min {
        Some((f, x)) => Solution {
            status: SolutionStatus::Optimal,
            x01: Some(x.to_01()),
            objective: Some(f),
            residual: Some(0),
            stats,
        },
        None => Solution {
            status: SolutionStatus::Infeasible,
            x01: None,
            objective: None,
            residual: None,
            stats,
        },
    })
}

/// Minimizes `h = f + σ‖Ax − b‖²` over the hypercube by enumeration.
/// Returns the value and the lexicographically smallest minimizer.
pub fn brute_force_penalized(
    p: &BqpPm1Instance,
    sigma: f64,
    exec: Exec,
) -> Result<(f64, AssignmentPm1)> {
    type Best = Option<(f64, Vec<i8>)>;
    let best: Best = scan(
        p,
        exec,
        || None,
        |acc: &mut Best, x, f, r| offer_min(acc, f + sigma * r, x),
        |a: Best, b: Best| merge_min(a, b),
    )?;
    let (_, x) = best.expect("hypercube is nonempty");
    let x = AssignmentPm1(x);
    Ok((p.penalized_objective(sigma, &x)?, x))
}

#[derive(Default)]
struct Acc {
    feas_min: Option<(f64, Vec<i8>)>,
    feas_max: Option<f64>,
    infeas_min: Option<f64>,
    all_min: f64,
    all_max: f64,
    res_min: (f64, Vec<i8>),
    feasible: u64,
    seen: bool,
}

impl Acc {
    fn visit(&mut self, x: &[i8], f: f64, r: f64) {
        if !self.seen {
            self.seen = true;
            self.all_min = f;
            self.all_max = f;
            self.res_min = (r, x.to_vec());
        } else {
            self.all_min = self.all_min.min(f);
            self.all_max = self.all_max.max(f);
            if better(r, x, self.res_min.0, &self.res_min.1) {
                self.res_min = (r, x.to_vec());
            }
        }
        if r < 0.5 {
            self.feasible += 1;
            offer_min(&mut self.feas_min, f, x);
            self.feas_max = Some(self.feas_max.map_or(f, |m| m.max(f)));
        } else {
            self.infeas_min = Some(self.infeas_min.map_or(f, |m| m.min(f)));
        }
    }

    fn merge(mut self, other: Self) -> Self {
        if !other.seen {
            return self;
        }
        if !self.seen {
            return other;
        }
        self.feas_min = merge_min(self.feas_min, other.feas_min);
        self.feas_max = opt_fold(self.feas_max, other.feas_max, f64::max);
        self.infeas_min = opt_fold(self.infeas_min, other.infeas_min, f64::min);
        self.all_min = self.all_min.min(other.all_min);
        self.all_max = self.all_max.max(other.all_max);
        if better(other.res_min.0, &other.res_min.1, self.res_min.0, &self.res_min.1) {
            self.res_min = other.res_min;
        }
        self.feasible += other.feasible;
        self
    }
}

fn opt_fold(a: Option<f64>, b: Option<f64>, f: fn(f64, f64) -> f64) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(f(a, b)),
        (a, None) => a,
        (None, b) => b,
    }
}

fn tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Strictly smaller value, or a tie broken towards the lexicographically
/// smaller point.
fn better(v: f64, x: &[i8], best_v: f64, best_x: &[i8]) -> bool {
    if tie(v, best_v) {
        x < best_x
    } else {
        v < best_v
    }
}

fn offer_min(acc: &mut Option<(f64, Vec<i8>)>, v: f64, x: &[i8]) {
    match acc {
        Some((bv, bx)) if !better(v, x, *bv, bx) => {}
        _ => *acc = Some((v, x.to_vec())),
    }
}

fn merge_min(a: Option<(f64, Vec<i8>)>, b: Option<(f64, Vec<i8>)>) -> Option<(f64, Vec<i8>)> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if better(b.0, &b.1, a.0, &a.1) { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Visits every point of the hypercube with `(x, f(x), ‖Ax − b‖²)`.
///
/// The cube is split into `2^s` shards on the high coordinates; each shard is
/// walked in Gray-code order with `O(n + m)` incremental updates. Shards are
/// folded in index order so the result does not depend on `exec`.
pub(crate) fn scan<A, I, V, M>(p: &BqpPm1Instance, exec: Exec, init: I, visit: V, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    V: Fn(&mut A, &[i8], f64, f64) + Sync + Send,
    M: Fn(A, A) -> A,
{
    let n = p.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge {
            what: "n",
            value: n,
            limit: BRUTE_FORCE_CAP,
        });
    }
    let shard_bits = n.min(6);
    let low_bits = n - shard_bits;
    let shards = par::map_range(exec, 1usize << shard_bits, |t| {
        let mut acc = init();
        let mut x: Vec<i8> = (0..n)
            .map(|j| {
                if j >= low_bits && (t >> (j - low_bits)) & 1 == 1 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        let mut walker = Walker::new(p, &x);
        visit(&mut acc, &x, walker.f, walker.res2());
        for step in 1u64..(1u64 << low_bits) {
            let j = step.trailing_zeros() as usize;
            walker.flip(p, &mut x, j);
            visit(&mut acc, &x, walker.f, walker.res2());
        }
        acc
    });
    let mut it = shards.into_iter();
    let first = it.next().expect("at least one shard");
    Ok(it.fold(first, merge))
}

struct Walker {
    f: f64,
    fx: DVector<f64>,
    r: DVector<f64>,
}

impl Walker {
    fn new(p: &BqpPm1Instance, x: &[i8]) -> Self {
        let xv = DVector::from_iterator(x.len(), x.iter().map(|&v| f64::from(v)));
        let fx = &p.f * &xv;
        let f = xv.dot(&fx) + p.c.dot(&xv) + p.alpha;
        let r = &p.a * &xv - &p.b;
        Self { f, fx, r }
    }

    fn res2(&self) -> f64 {
        self.r.norm_squared()
    }

    fn flip(&mut self, p: &BqpPm1Instance, x: &mut [i8], j: usize) {
        let xj = f64::from(x[j]);
        self.f += -4.0 * xj * self.fx[j] + 4.0 * p.f[(j, j)] - 2.0 * p.c[j] * xj;
        self.fx.axpy(-2.0 * xj, &p.f.column(j), 1.0);
        if p.m() > 0 {
            self.r.axpy(-2.0 * xj, &p.a.column(j), 1.0);
        }
        x[j] = -x[j];
    }
}

fn symmetrize(f: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let t = f.transpose();
    let deviation = (&f - &t).amax();
    if deviation > SYMMETRY_REPAIR_TOL {
        return Err(Error::NotSymmetric { deviation });
    }
    if deviation == 0.0 {
        Ok(f)
    } else {
        Ok((f + t) * 0.5)
    }
}

fn index_iter(m: &DMatrix<f64>) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
    (0..m.nrows()).flat_map(move |r| (0..m.ncols()).map(move |c| ((r, c), m[(r, c)])))
}

pub(crate) fn is_integral(v: f64) -> bool {
    v.is_finite() && (v - v.round()).abs() <= INTEGRALITY_TOL
}

pub(crate) fn snap(v: f64) -> f64 {
    if (v - v.round()).abs() <= INTEGRALITY_TOL {
        v.round()
    } else {
        v
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
