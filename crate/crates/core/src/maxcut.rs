//! From a penalized problem to max-cut on `n + 1` vertices.
//!
//! With `x̄ = [1; x]`, `h(x) = x̄ᵀQx̄`. For `x̄ ∈ {−1,1}ⁿ⁺¹` the identity
//! `x̄ᵀ(Diag(Qe) − Q)x̄ = eᵀQe − x̄ᵀQx̄` turns minimizing `h` into maximizing the
//! cut form `x̄ᵀCx̄` with `C = Diag(Qe) − Q`, the quarter Laplacian of the graph
//! whose edge weights are `4Qᵢⱼ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AssignmentPm1, BqpPm1Instance};

#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    pub q: DMatrix<f64>,
    /// `eᵀQe`.
    pub const_eqe: f64,
    pub sigma: f64,
}

/// `Q = [[α + σbᵀb, (c − 2σAᵀb)ᵀ/2], [(c − 2σAᵀb)/2, F + σAᵀA]]`.
pub fn build_q(p: &BqpPm1Instance, sigma: f64) -> Result<QMatrix> {
    if sigma.is_nan() || sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("penalty must be nonnegative, got {sigma}")));
    }
    let n = p.n();
    let mut q = DMatrix::zeros(n + 1, n + 1);
    let atb = p.a.tr_mul(&p.b);
    let ata = p.a.tr_mul(&p.a);
    q[(0, 0)] = p.alpha + sigma * p.b.norm_squared();
    for j in 0..n {
        let v = 0.5 * (p.c[j] - 2.0 * sigma * atb[j]);
        q[(0, j + 1)] = v;
        q[(j + 1, 0)] = v;
    }
    q.view_mut((1, 1), (n, n)).copy_from(&(&p.f + ata * sigma));
    let const_eqe = q.sum();
    Ok(QMatrix { q, const_eqe, sigma })
}

/// A weighted graph on `{0, …, n}` with the offsets needed to read penalized
/// values back off cut values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxCutInstance {
    /// Symmetric, zero diagonal.
    pub weights: DMatrix<f64>,
    /// `¼(Diag(𝒜e) − 𝒜)`.
    pub c: DMatrix<f64>,
    /// `eᵀQe`.
    pub constant: f64,
    pub rho: Option<f64>,
    /// `eᵀQe − ρ`: a cut at least this large certifies a feasible point.
    pub rho_cutoff: Option<f64>,
}

impl MaxCutInstance {
    /// Graph with the given weights and no penalty offsets.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: weights.ncols(),
            });
        }
        let asym = (&weights - weights.transpose()).amax();
        if asym > 0.0 {
            return Err(Error::NotSymmetric { deviation: asym });
        }
        let mut w = weights;
        w.fill_diagonal(0.0);
        let c = laplacian_quarter(&w);
        Ok(Self {
            weights: w,
            c,
            constant: 0.0,
            rho: None,
            rho_cutoff: None,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.weights.nrows()
    }

    /// `x̄ᵀCx̄`, the weight of edges crossing the partition.
    pub fn cut_value(&self, xbar: &[i8]) -> f64 {
        let n = self.n_vertices();
        let mut v = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                if xbar[i] != xbar[j] {
                    v += self.weights[(i, j)];
                }
            }
        }
        v
    }

    pub fn cut(&self, xbar: Vec<i8>) -> Cut {
        let value = self.cut_value(&xbar);
        Cut { xbar, value }
    }

    /// `h(x) = eᵀQe − x̄ᵀCx̄` for the assignment encoded by a cut.
    pub fn penalized_value(&self, cut_value: f64) -> f64 {
        self.constant - cut_value
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }
}

fn laplacian_quarter(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let deg = w * DVector::from_element(n, 1.0);
    (DMatrix::from_diagonal(&deg) - w) * 0.25
}

/// `𝒜ᵢⱼ = 4Qᵢⱼ` off the diagonal; `C = ¼(Diag(𝒜e) − 𝒜)`.
pub fn to_maxcut(q: &QMatrix, rho: Option<f64>) -> MaxCutInstance {
    let mut w = &q.q * 4.0;
    w.fill_diagonal(0.0);
    let c = laplacian_quarter(&w);
    MaxCutInstance {
        weights: w,
        c,
        constant: q.const_eqe,
        rho,
        rho_cutoff: rho.map(|r| q.const_eqe - r),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub xbar: Vec<i8>,
    pub value: f64,
}

/// Normalizes `x̄₀ = 1` and drops the root coordinate.
pub fn cut_to_assignment(cut: &Cut) -> AssignmentPm1 {
    let s = cut.xbar[0];
    AssignmentPm1::new(cut.xbar[1..].iter().map(|&v| v * s).collect()).expect("cut entries are ±1")
}

/// `[1; x]` as a cut vector.
pub fn assignment_to_xbar(x: &AssignmentPm1) -> Vec<i8> {
    std::iter::once(1).chain(x.as_slice().iter().copied()).collect()
}
