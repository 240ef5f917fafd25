//! Clique inequality separation.
//!
//! For `b ∈ {−1,0,1}ᵈ` with an odd number of nonzeros, `bᵀXb ≥ 1` holds for
//! every cut matrix `X = x̄x̄ᵀ`. Three nonzeros give the triangle
//! inequalities, five the 5-clique inequalities. Violations are reported in
//! pairwise-sum units, `(1 − bᵀXb)/2`, so a triangle `xᵢⱼ + xᵢₖ + xⱼₖ ≥ −1`
//! evaluated at `−3` is violated by `2`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::par::{self, Exec};

#[derive(Debug, Clone, PartialEq)]
pub struct CliqueCut {
    /// Sorted support.
    pub support: Vec<usize>,
    /// Signs on the support, first sign normalized to `+1`.
    pub signs: Vec<i8>,
    pub violation: f64,
}

impl CliqueCut {
    fn new(support: Vec<usize>, mut signs: Vec<i8>, violation: f64) -> Self {
        if signs[0] < 0 {
            signs.iter_mut().for_each(|s| *s = -*s);
        }
        Self {
            support,
            signs,
            violation,
        }
    }

    pub fn to_vector(&self, dim: usize) -> DVector<f64> {
        let mut b = DVector::zeros(dim);
        for (&i, &s) in self.support.iter().zip(&self.signs) {
            b[i] = f64::from(s);
        }
        b
    }

    /// `bᵀXb`.
    pub fn lhs(&self, x: &DMatrix<f64>) -> f64 {
        let mut v = 0.0;
        for (a, (&i, &si)) in self.support.iter().zip(&self.signs).enumerate() {
            for (&j, &sj) in self.support[a..].iter().zip(&self.signs[a..]) {
                let w = f64::from(si) * f64::from(sj) * x[(i, j)];
                v += if i == j { w } else { 2.0 * w };
            }
        }
        v
    }

    pub fn key(&self) -> (Vec<usize>, Vec<i8>) {
        (self.support.clone(), self.signs.clone())
    }
}

/// Every triangle inequality violated by more than `min_violation`, most
/// violated first (ties by index), at most `budget` of them.
pub fn separate_triangle(x: &DMatrix<f64>, min_violation: f64, budget: usize, exec: Exec) -> Vec<CliqueCut> {
    let n = x.nrows();
    const PATTERNS: [[i8; 3]; 4] = [[1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1]];
    let per_i = par::map_range(exec, n, |i| {
        let mut found = Vec::new();
        for j in i + 1..n {
            for k in j + 1..n {
                let (xij, xik, xjk) = (x[(i, j)], x[(i, k)], x[(j, k)]);
                for s in PATTERNS {
                    let sum = f64::from(s[0] * s[1]) * xij
                        + f64::from(s[0] * s[2]) * xik
                        + f64::from(s[1] * s[2]) * xjk;
                    let violation = -1.0 - sum;
                    if violation > min_violation {
                        found.push(CliqueCut::new(vec![i, j, k], s.to_vec(), violation));
                    }
                }
            }
        }
        found
    });
    let mut all: Vec<CliqueCut> = per_i.into_iter().flatten().collect();
    sort_cuts(&mut all);
    all.truncate(budget);
    all
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicParams {
    pub restarts: usize,
    pub swaps: usize,
    pub t0: f64,
    pub decay: f64,
    pub min_violation: f64,
    pub budget: usize,
    pub seed: u64,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        Self {
            restarts: 50,
            swaps: 100,
            t0: 1.0,
            decay: 0.95,
            min_violation: 1e-3,
            budget: 300,
            seed: 0x5eed,
        }
    }
}

/// Minimum of `bᵀX_Sb` over sign patterns with `b₀ = 1`, and the pattern.
fn best_signs(x: &DMatrix<f64>, s: &[usize; 5]) -> (f64, [i8; 5]) {
    let mut best = (f64::INFINITY, [1i8; 5]);
    for mask in 0u32..16 {
        let mut b = [1i8; 5];
        for (t, bt) in b.iter_mut().enumerate().skip(1) {
            if mask >> (t - 1) & 1 == 1 {
                *bt = -1;
            }
        }
        let mut v = 5.0;
        for a in 0..5 {
            for c in a + 1..5 {
                v += 2.0 * f64::from(b[a] * b[c]) * x[(s[a], s[c])];
            }
        }
        if v < best.0 {
            best = (v, b);
        }
    }
    best
}

fn to_cut(s: &[usize; 5], b: [i8; 5], lhs: f64) -> CliqueCut {
    let mut pairs: Vec<(usize, i8)> = s.iter().copied().zip(b).collect();
    pairs.sort_unstable();
    CliqueCut::new(
        pairs.iter().map(|p| p.0).collect(),
        pairs.iter().map(|p| p.1).collect(),
        (1.0 - lhs) / 2.0,
    )
}

/// Annealing search for violated 5-clique inequalities.
///
/// Each restart draws a random 5-subset and performs single-index swaps; a
/// swap that raises the best achievable `bᵀXb` by `Δ` is accepted with
/// probability `exp(−Δ/T)`, `T` decaying geometrically. Every visited subset
/// whose violation exceeds `min_violation` is collected. Restarts use
/// independent seeded streams, so the output is identical for any `exec`.
pub fn separate_five_clique(x: &DMatrix<f64>, params: &HeuristicParams, exec: Exec) -> Vec<CliqueCut> {
    let n = x.nrows();
    if n < 5 {
        return Vec::new();
    }
    let per_restart = par::map_range(exec, params.restarts, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ (r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut s = [0usize; 5];
        let picked = rand::seq::index::sample(&mut rng, n, 5);
        for (t, v) in picked.iter().enumerate() {
            s[t] = v;
        }
        let (mut cur, mut signs) = best_signs(x, &s);
        let mut found = Vec::new();
        if (1.0 - cur) / 2.0 > params.min_violation {
            found.push(to_cut(&s, signs, cur));
        }
        let mut temp = params.t0;
        let swaps = if n > 5 { params.swaps } else { 0 };
        for _ in 0..swaps {
            let pos = rng.random_range(0..5);
            let v = loop {
                let v = rng.random_range(0..n);
                if !s.contains(&v) {
                    break v;
                }
            };
            let mut cand = s;
            cand[pos] = v;
            let (val, b) = best_signs(x, &cand);
            let delta = val - cur;
            let accept = delta < 0.0 || rng.random::<f64>() < (-delta / temp.max(1e-300)).exp();
            if accept {
                s = cand;
                cur = val;
                signs = b;
                if (1.0 - cur) / 2.0 > params.min_violation {
                    found.push(to_cut(&s, signs, cur));
                }
            }
            temp *= params.decay;
        }
        found
    });
    let mut all: Vec<CliqueCut> = per_restart.into_iter().flatten().collect();
    sort_cuts(&mut all);
    all.dedup_by(|a, b| a.support == b.support && a.signs == b.signs);
    all.truncate(params.budget);
    all
}

fn sort_cuts(cuts: &mut [CliqueCut]) {
    cuts.sort_by(|a, b| {
        b.violation
            .total_cmp(&a.violation)
            .then_with(|| a.support.cmp(&b.support))
            .then_with(|| a.signs.cmp(&b.signs))
    });
}
