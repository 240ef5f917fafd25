//! Random and structured instance families.
//!
//! All draws come from `ChaCha8Rng::seed_from_u64(seed)`. Integers in
//! `[lo, hi]` are drawn by [`uniform_int`]: take `next_u64`, reject values at
//! or above the largest multiple of the width, reduce modulo the width. This
//! is easy to reproduce in any language with a ChaCha8 implementation.

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Bqp01Instance;

/// Uniform integer in `[lo, hi]` by rejection sampling.
pub fn uniform_int(rng: &mut impl RngCore, lo: i64, hi: i64) -> i64 {
    assert!(lo <= hi, "empty interval [{lo}, {hi}]");
    let width = (hi - lo) as u64 + 1;
    if width == 0 {
        return rng.next_u64() as i64;
    }
    let zone = u64::MAX - (u64::MAX % width);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return lo + (v % width) as i64;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RgiFamily {
    /// `b̂ = 0`, so `y = 0` is always feasible.
    One,
    /// Nonnegative `Â`, `b̂ = b_v·e`.
    Two,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RgiSpec {
    pub family: RgiFamily,
    pub n: usize,
    pub m: usize,
    pub a_interval: (i64, i64),
    pub f_interval: (i64, i64),
    pub b_v: i64,
    pub seed: u64,
}

const ONE_INTERVALS: [(i64, i64); 3] = [(-1, 1), (-3, 3), (-7, 7)];
const TWO_A: [(i64, i64); 2] = [(0, 1), (0, 3)];
const TWO_B: [i64; 3] = [10, 15, 20];
const TWO_F: [(i64, i64); 4] = [(0, 5), (-5, 5), (0, 10), (-10, 10)];

impl RgiSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        for (name, (lo, hi)) in [("A", self.a_interval), ("F", self.f_interval)] {
            if lo > hi {
                return Err(Error::InvalidArgument(format!("{name} interval [{lo}, {hi}] is empty")));
            }
        }
        let ok = match self.family {
            RgiFamily::One => {
                self.b_v == 0 && ONE_INTERVALS.contains(&self.a_interval) && ONE_INTERVALS.contains(&self.f_interval)
            }
            RgiFamily::Two => {
                TWO_A.contains(&self.a_interval) && TWO_B.contains(&self.b_v) && TWO_F.contains(&self.f_interval)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "interval combination A {:?}, F {:?}, b_v {} is not part of family {:?}",
                self.a_interval, self.f_interval, self.b_v, self.family
            )))
        }
    }
}

/// Random instance: `ĉ = 0`, `b̂ = b_v·e`, `Â` uniform in `a_interval`, `F̂`
/// symmetric with its upper triangle uniform in `f_interval`.
pub fn gen_rgi(spec: &RgiSpec) -> Result<Bqp01Instance> {
    spec.validate()?;
    Ok(draw_rgi(spec))
}

/// [`gen_rgi`] without the family check, for scaled-down experiments.
pub fn gen_rgi_unchecked(spec: &RgiSpec) -> Result<Bqp01Instance> {
    if spec.n == 0 || spec.a_interval.0 > spec.a_interval.1 || spec.f_interval.0 > spec.f_interval.1 {
        return Err(Error::InvalidArgument(format!("invalid spec {spec:?}")));
    }
    Ok(draw_rgi(spec))
}

fn draw_rgi(spec: &RgiSpec) -> Bqp01Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let (flo, fhi) = spec.f_interval;
    let mut f = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = uniform_int(&mut rng, flo, fhi) as f64;
            f[(i, j)] = v;
            f[(j, i)] = v;
        }
    }
    let (alo, ahi) = spec.a_interval;
    let mut a = DMatrix::zeros(spec.m, n);
    for r in 0..spec.m {
        for j in 0..n {
            a[(r, j)] = uniform_int(&mut rng, alo, ahi) as f64;
        }
    }
    let b = DVector::from_element(spec.m, spec.b_v as f64);
    Bqp01Instance::new(f, DVector::zeros(n), a, b).expect("generated data is valid")
}

/// Replaces row `r` by `2·Â_r` and `b̂_r` by `2·b̂_r + 1`. The left side is then
/// even for every binary `y` and the right side odd, so `Δ = ∅`.
pub fn make_parity_conflicting(p: &Bqp01Instance, r: usize) -> Result<Bqp01Instance> {
    if r >= p.m() {
        return Err(Error::InvalidArgument(format!("row {r} out of range for m = {}", p.m())));
    }
    let mut a = p.a_hat().clone();
    let mut b = p.b_hat().clone();
    a.row_mut(r).scale_mut(2.0);
    b[r] = 2.0 * b[r] + 1.0;
    Bqp01Instance::new(p.f_hat().clone(), p.c_hat().clone(), a, b)
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(Error::InvalidArgument(format!("k = {k} must lie in [1, {n}]")))
    } else {
        Ok(())
    }
}

/// Densest `k`-subgraph: `max ½yᵀAy s.t. eᵀy = k`, encoded as minimization
/// with `F̂ = −½A`. The optimal objective is minus the number of induced
/// edges.
pub fn build_k_cluster(adjacency: &DMatrix<f64>, k: usize) -> Result<Bqp01Instance> {
    let n = adjacency.nrows();
    if adjacency.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: adjacency.ncols(),
        });
    }
    check_k(k, n)?;
    if adjacency.iter().any(|&v| v != 0.0 && v != 1.0) || (0..n).any(|i| adjacency[(i, i)] != 0.0) {
        return Err(Error::InvalidArgument("adjacency must be 0/1 with an empty diagonal".into()));
    }
    Bqp01Instance::new(
        adjacency * -0.5,
        DVector::zeros(n),
        DMatrix::from_element(1, n, 1.0),
        DVector::from_element(1, k as f64),
    )
}

/// Cardinality-constrained problem `min yᵀQy + qᵀy s.t. eᵀy = k`.
pub fn build_cbqp(q: &DMatrix<f64>, lin: &DVector<f64>, k: usize) -> Result<Bqp01Instance> {
    let n = lin.len();
    check_k(k, n)?;
    Bqp01Instance::new(
        q.clone(),
        lin.clone(),
        DMatrix::from_element(1, n, 1.0),
        DVector::from_element(1, k as f64),
    )
}

/// The two cardinalities `n/5` and `4n/5` (rounded, at least 1).
pub fn cbqp_default_ks(n: usize) -> [usize; 2] {
    let r = |num: usize| ((num as f64 * n as f64 / 5.0).round() as usize).clamp(1, n);
    [r(1), r(4)]
}

/// Random `CBQP` data: symmetric integer `Q` and integer `q`, both in
/// `[−range, range]`.
pub fn random_cbqp(n: usize, k: usize, range: i64, seed: u64) -> Result<Bqp01Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = uniform_int(&mut rng, -range, range) as f64;
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    let lin = DVector::from_fn(n, |_, _| uniform_int(&mut rng, -range, range) as f64);
    build_cbqp(&q, &lin, k)
}

/// Erdős–Rényi graph with integer edge probability `percent`.
pub fn random_graph(n: usize, percent: u8, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if uniform_int(&mut rng, 0, 99) < i64::from(percent) {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    a
}
