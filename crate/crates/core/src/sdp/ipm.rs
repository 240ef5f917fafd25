//! Infeasible-start primal-dual interior point method with the HKM search
//! direction and Mehrotra predictor-corrector steps.
//!
//! Standard form (always minimization):
//!
//! ```text
//! min ⟨C, X⟩ + cₗᵀs   s.t.  ⟨Aᵢ, X⟩ + aᵢᵀs = bᵢ,  X ⪰ 0,  s ≥ 0
//! ```
//!
//! The nonnegative block carries cut slacks and phase-one residuals.

use nalgebra::{DMatrix, DVector};

use super::{lambda_min, ConstraintMatrix, Sense, SdpOptions, SdpProblem, SdpStatus};

pub(crate) struct StdForm {
    k: usize,
    c: DMatrix<f64>,
    rows: Vec<RowKind>,
    /// Columns are the vectors of the rank-one rows.
    vmat: DMatrix<f64>,
    dense: Vec<DMatrix<f64>>,
    b: DVector<f64>,
    lp_cost: DVector<f64>,
    lp_cols: Vec<Vec<(usize, f64)>>,
}

#[derive(Clone, Copy)]
enum RowKind {
    RankOne(usize),
    Dense(usize),
}

impl StdForm {
    fn build(
        k: usize,
        c: DMatrix<f64>,
        mats: Vec<&ConstraintMatrix>,
        b: Vec<f64>,
        lp_cost: Vec<f64>,
        lp_cols: Vec<Vec<(usize, f64)>>,
    ) -> Self {
        let mut rows = Vec::with_capacity(mats.len());
        let mut vecs: Vec<&DVector<f64>> = Vec::new();
        let mut dense = Vec::new();
        for a in mats {
            match a {
                ConstraintMatrix::RankOne(v) => {
                    rows.push(RowKind::RankOne(vecs.len()));
                    vecs.push(v);
                }
                ConstraintMatrix::Dense(d) => {
                    rows.push(RowKind::Dense(dense.len()));
                    dense.push(d.clone());
                }
            }
        }
        let vmat = DMatrix::from_fn(k, vecs.len(), |i, j| vecs[j][i]);
        Self {
            k,
            c,
            rows,
            vmat,
            dense,
            b: DVector::from_vec(b),
            lp_cost: DVector::from_vec(lp_cost),
            lp_cols,
        }
    }

    /// Kept equality rows first, then one row per cut with slack `−1`.
    pub(crate) fn from_problem(p: &SdpProblem, kept: &[usize]) -> Self {
        let c = match p.sense {
            Sense::Min => p.objective.clone(),
            Sense::Max => -&p.objective,
        };
        let mut mats = Vec::new();
        let mut b = Vec::new();
        for &i in kept {
            mats.push(&p.eq_constraints[i].0);
            b.push(p.eq_constraints[i].1);
        }
        let mut lp_cols = Vec::new();
        for (a, g) in &p.ineq_cuts {
            lp_cols.push(vec![(mats.len(), -1.0)]);
            mats.push(a);
            b.push(*g);
        }
        let lp_cost = vec![0.0; lp_cols.len()];
        Self::build(p.dim, c, mats, b, lp_cost, lp_cols)
    }

    /// `min Σ(r⁺ + r⁻)` with `⟨Aᵢ, X⟩ + r⁺ᵢ − r⁻ᵢ = bᵢ`.
    pub(crate) fn phase_one(p: &SdpProblem) -> Self {
        let mats: Vec<&ConstraintMatrix> = p.eq_constraints.iter().map(|(a, _)| a).collect();
        let b = p.eq_constraints.iter().map(|(_, b)| *b).collect();
        let m = mats.len();
        let mut lp_cols = Vec::with_capacity(2 * m);
        for i in 0..m {
            lp_cols.push(vec![(i, 1.0)]);
            lp_cols.push(vec![(i, -1.0)]);
        }
        Self::build(p.dim, DMatrix::zeros(p.dim, p.dim), mats, b, vec![1.0; 2 * m], lp_cols)
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    /// `A(G)ᵢ = ⟨Aᵢ, G⟩` (only the symmetric part of `G` matters).
    fn apply(&self, g: &DMatrix<f64>) -> DVector<f64> {
        let gv = g * &self.vmat;
        let mut out = DVector::zeros(self.m());
        for (i, row) in self.rows.iter().enumerate() {
            out[i] = match *row {
                RowKind::RankOne(j) => self.vmat.column(j).dot(&gv.column(j)),
                RowKind::Dense(j) => self.dense[j].component_mul(g).sum(),
            };
        }
        out
    }

    /// `Σ yᵢAᵢ`.
    fn adjoint(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.k, self.k);
        let mut scaled = self.vmat.clone();
        for (i, row) in self.rows.iter().enumerate() {
            match *row {
                RowKind::RankOne(j) => scaled.column_mut(j).scale_mut(y[i]),
                RowKind::Dense(j) => out += &self.dense[j] * y[i],
            }
        }
        out.gemm(1.0, &scaled, &self.vmat.transpose(), 1.0);
        out
    }

    fn lp_apply(&self, s: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        for (col, &sv) in self.lp_cols.iter().zip(s.iter()) {
            for &(r, a) in col {
                out[r] += a * sv;
            }
        }
        out
    }

    fn lp_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.lp_cols.len(),
            self.lp_cols.iter().map(|col| col.iter().map(|&(r, a)| a * y[r]).sum()),
        )
    }

    /// HKM Schur complement `Mᵢⱼ = ⟨Aᵢ, X Aⱼ Z⁻¹⟩ + Σ aᵢaⱼ s/z`.
    fn schur(&self, x: &DMatrix<f64>, zinv: &DMatrix<f64>, s_over_z: &DVector<f64>) -> DMatrix<f64> {
        let m = self.m();
        let mut mm = DMatrix::zeros(m, m);
        let vt = self.vmat.transpose();
        let pmat = &vt * x * &self.vmat;
        let rmat = &vt * zinv * &self.vmat;
        let r1: Vec<(usize, usize)> = self
            .rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| match *r {
                RowKind::RankOne(j) => Some((i, j)),
                RowKind::Dense(_) => None,
            })
            .collect();
        for &(i, a) in &r1 {
            for &(j, b) in &r1 {
                mm[(i, j)] = pmat[(a, b)] * rmat[(a, b)];
            }
        }
        for (j, row) in self.rows.iter().enumerate() {
            if let RowKind::Dense(d) = *row {
                let g = x * &self.dense[d] * zinv;
                let col = self.apply(&g);
                for i in 0..m {
                    mm[(i, j)] = col[i];
                    mm[(j, i)] = col[i];
                }
            }
        }
        for (col, &w) in self.lp_cols.iter().zip(s_over_z.iter()) {
            for &(r1, a1) in col {
                for &(r2, a2) in col {
                    mm[(r1, r2)] += a1 * a2 * w;
                }
            }
        }
        mm
    }
}

pub(crate) struct IpmResult {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub pobj: f64,
    pub dobj: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub rel_gap: f64,
}

struct Iterate {
    x: DMatrix<f64>,
    z: DMatrix<f64>,
    y: DVector<f64>,
    s: DVector<f64>,
    zl: DVector<f64>,
}

struct Step {
    dx: DMatrix<f64>,
    dz: DMatrix<f64>,
    dy: DVector<f64>,
    ds: DVector<f64>,
    dzl: DVector<f64>,
}

pub(crate) fn run(sf: &StdForm, opts: &SdpOptions) -> IpmResult {
    let k = sf.k;
    let m = sf.m();
    let nlp = sf.lp_cost.len();
    let cscale = sf.c.amax().max(sf.lp_cost.amax()).max(1.0);
    let c = &sf.c / cscale;
    let lpc = &sf.lp_cost / cscale;
    let bnorm = sf.b.norm();
    let cnorm = c.norm() + lpc.norm();

    let row_norms: Vec<f64> = sf
        .rows
        .iter()
        .map(|r| match *r {
            RowKind::RankOne(j) => sf.vmat.column(j).norm_squared(),
            RowKind::Dense(j) => sf.dense[j].norm(),
        })
        .collect();
    let kf = k as f64;
    let mut xi = 10f64.max(kf.sqrt());
    let mut eta = 10f64.max(kf.sqrt()).max(c.norm());
    for (i, &an) in row_norms.iter().enumerate() {
        xi = xi.max(kf * (1.0 + sf.b[i].abs()) / (1.0 + an));
        eta = eta.max(an);
    }
    let lp_norm = sf.lp_cols.iter().map(|c| c.len() as f64).fold(1.0, f64::max).sqrt();
    let mut it = Iterate {
        x: DMatrix::identity(k, k) * xi,
        z: DMatrix::identity(k, k) * eta,
        y: DVector::zeros(m),
        s: DVector::from_element(nlp, xi.max(10.0 * lp_norm)),
        zl: DVector::from_element(nlp, eta.max(10.0 * lp_norm)),
    };

    let mut out = IpmResult {
        x: it.x.clone(),
        y: it.y.clone(),
        pobj: 0.0,
        dobj: 0.0,
        status: SdpStatus::MaxIter,
        iterations: 0,
        primal_infeasibility: f64::INFINITY,
        dual_infeasibility: f64::INFINITY,
        rel_gap: f64::INFINITY,
    };
    let ncone = (k + nlp) as f64;

    for iter in 0..=opts.max_iter {
        let rp = &sf.b - sf.apply(&it.x) - sf.lp_apply(&it.s);
        let rd = &c - sf.adjoint(&it.y) - &it.z;
        let rdl = &lpc - sf.lp_adjoint(&it.y) - &it.zl;
        let pobj = c.component_mul(&it.x).sum() + lpc.dot(&it.s);
        let dobj = sf.b.dot(&it.y);
        let pinf = rp.norm() / (1.0 + bnorm);
        let dinf = (rd.norm() + rdl.norm()) / (1.0 + cnorm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

        out.x = it.x.clone();
        out.y = &it.y * cscale;
        out.pobj = pobj * cscale;
        out.dobj = dobj * cscale;
        out.iterations = iter;
        out.primal_infeasibility = pinf;
        out.dual_infeasibility = dinf;
        out.rel_gap = gap;

        if pinf <= opts.tol && dinf <= opts.tol && gap <= opts.tol {
            out.status = SdpStatus::Solved;
            return out;
        }
        if iter == opts.max_iter {
            break;
        }
        if !it.y.iter().all(|v| v.is_finite()) || it.y.amax() > 1e14 {
            out.status = SdpStatus::NumericalFailure;
            return out;
        }

        let mu = (it.x.component_mul(&it.z).sum() + it.s.dot(&it.zl)) / ncone;
        let Some(zchol) = it.z.clone().cholesky() else {
            out.status = SdpStatus::NumericalFailure;
            return out;
        };
        let zinv = zchol.inverse();
        let s_over_z = it.s.component_div(&it.zl);
        let mut schur = sf.schur(&it.x, &zinv, &s_over_z);
        let Some(solver) = factor(&mut schur) else {
            out.status = SdpStatus::NumericalFailure;
            return out;
        };

        // A(X R_d Z⁻¹) and (s/z)∘r_dl do not depend on the centering term.
        let base = sf.apply(&(&it.x * &rd * &zinv)) + sf.lp_apply(&s_over_z.component_mul(&rdl));
        let direction = |sigma_mu: f64, corr: Option<(&DMatrix<f64>, &DVector<f64>)>| -> Step {
            let mut h = &zinv * sigma_mu - &it.x;
            let mut hl = DVector::from_fn(nlp, |i, _| sigma_mu / it.zl[i] - it.s[i]);
            if let Some((cm, cl)) = corr {
                h -= cm * &zinv;
                hl -= cl.component_div(&it.zl);
            }
            let rhs = &rp - sf.apply(&h) - sf.lp_apply(&hl) + &base;
            let dy = solver.solve(&rhs);
            let dz = &rd - sf.adjoint(&dy);
            let dzl = &rdl - sf.lp_adjoint(&dy);
            let dx = h - &it.x * &dz * &zinv;
            let dx = (&dx + dx.transpose()) * 0.5;
            let ds = hl - s_over_z.component_mul(&dzl);
            Step { dx, dz, dy, ds, dzl }
        };

        let pred = direction(0.0, None);
        let ap = max_step(&it.x, &pred.dx).min(lp_ratio(&it.s, &pred.ds)).min(1.0);
        let ad = max_step(&it.z, &pred.dz).min(lp_ratio(&it.zl, &pred.dzl)).min(1.0);
        let mu_aff = ((&it.x + &pred.dx * ap).component_mul(&(&it.z + &pred.dz * ad)).sum()
            + (&it.s + &pred.ds * ap).dot(&(&it.zl + &pred.dzl * ad)))
            / ncone;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr = &pred.dx * &pred.dz;
        let corr_l = pred.ds.component_mul(&pred.dzl);
        let step = direction(sigma * mu, Some((&corr, &corr_l)));

        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap = (gamma * max_step(&it.x, &step.dx).min(lp_ratio(&it.s, &step.ds))).min(1.0);
        let ad = (gamma * max_step(&it.z, &step.dz).min(lp_ratio(&it.zl, &step.dzl))).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            out.status = SdpStatus::NumericalFailure;
            return out;
        }
        it.x += &step.dx * ap;
        it.s += &step.ds * ap;
        it.y += &step.dy * ad;
        it.z += &step.dz * ad;
        it.zl += &step.dzl * ad;
        it.x = (&it.x + it.x.transpose()) * 0.5;
        it.z = (&it.z + it.z.transpose()) * 0.5;
    }
    out.status = SdpStatus::MaxIter;
    out
}

enum Factor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Factor {
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Chol(c) => c.solve(rhs),
            Factor::Lu(l) => l.solve(rhs).unwrap_or_else(|| DVector::zeros(rhs.len())),
        }
    }
}

/// Cholesky with escalating diagonal regularization, LU as a last resort.
fn factor(m: &mut DMatrix<f64>) -> Option<Factor> {
    let sym = (&*m + m.transpose()) * 0.5;
    if let Some(c) = sym.clone().cholesky() {
        return Some(Factor::Chol(c));
    }
    let scale = sym.diagonal().amax().max(1e-300);
    for reg in [1e-14, 1e-12, 1e-10] {
        let mut r = sym.clone();
        for i in 0..r.nrows() {
            r[(i, i)] += reg * scale;
        }
        if let Some(c) = r.cholesky() {
            return Some(Factor::Chol(c));
        }
    }
    let lu = sym.lu();
    if lu.is_invertible() {
        Some(Factor::Lu(lu))
    } else {
        None
    }
}

/// Largest `α` with `X + α·ΔX ⪰ 0`.
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(chol) = x.clone().cholesky() else {
        return 0.0;
    };
    let l = chol.l();
    let Some(t) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(b) = l.solve_lower_triangular(&t.transpose()) else {
        return 0.0;
    };
    let b = (&b + b.transpose()) * 0.5;
    let lmin = lambda_min(&b);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn lp_ratio(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&a, &d)| -a / d)
        .fold(f64::INFINITY, f64::min)
}
