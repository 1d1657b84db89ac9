//! Primal-dual interior-point solver for linear/semidefinite conic programs.
//!
//! Problems are posed over free variables `x`:
//!
//! ```text
//!   minimise / maximise  c'x
//!   subject to           A x = b
//!                        F0_k + sum_j x_j F_jk  in K_k   for every block k
//! ```
//!
//! where each `K_k` is a nonnegative orthant or a real symmetric PSD cone.
//! Complex Hermitian LMIs are embedded as `[[Re M, -Im M], [Im M, Re M]]`
//! by [`Model::add_psd`].
//!
//! Internally the solver runs a homogeneous self-dual embedding with
//! Nesterov-Todd scaling, a Mehrotra predictor-corrector and a 0.98
//! fraction-to-boundary rule, started from the identity-scaled central point
//! `s = z = e`, `tau = kappa = 1`. Runs are deterministic.
//! Infeasible and unbounded problems terminate with a Farkas-type ray.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{c, Operator, C64};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIterations => "max-iterations",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Optimality requires |primal - dual| <= gap_tol * max(1, |objective|).
    pub gap_tol: f64,
    /// Relative primal and dual residual tolerance.
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { gap_tol: 1e-9, feas_tol: 1e-9, max_iter: 120 }
    }
}

/// One cone block in user form: the affine expression `f0 + sum_j x_j f_j` lies in the cone.
#[derive(Clone, Debug)]
pub enum ConeBlock {
    /// Componentwise nonnegativity of `f0[r] + sum_j rows[r][j] x_j`.
    Nonneg { f0: Vec<f64>, rows: Vec<Vec<(usize, f64)>> },
    /// Symmetric PSD constraint. Entries are stored with i <= j.
    Psd { dim: usize, f0: Vec<(usize, usize, f64)>, coeffs: BTreeMap<usize, Vec<(usize, usize, f64)>> },
}

impl ConeBlock {
    pub fn degree(&self) -> usize {
        match self {
            ConeBlock::Nonneg { f0, .. } => f0.len(),
            ConeBlock::Psd { dim, .. } => *dim,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConicProblem {
    pub n: usize,
    pub sense: Sense,
    pub c: Vec<f64>,
    /// Equality rows (sparse) with right-hand side `b`.
    pub eq_rows: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
    pub blocks: Vec<ConeBlock>,
}

/// Value of one cone block (slack or dual multiplier).
#[derive(Clone, Debug)]
pub enum BlockValue {
    Nonneg(Vec<f64>),
    Psd(DMatrix<f64>),
}

#[derive(Clone, Debug)]
pub enum Certificate {
    /// Dual ray (y, z) proving primal infeasibility: A'y + G'z = 0, b'y + h'z = -1.
    PrimalInfeasible { y: Vec<f64>, z: Vec<BlockValue> },
    /// Primal ray x with c'x < 0 in the internal minimisation form, Ax = 0, Gx in -K.
    DualInfeasible { x: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Equality multipliers.
    pub y: Vec<f64>,
    /// Cone multipliers, one per block.
    pub z: Vec<BlockValue>,
    /// Cone slacks `f0 + sum x_j f_j`, one per block.
    pub s: Vec<BlockValue>,
    /// Objective value of `x` in the user's sense.
    pub primal_value: f64,
    /// Objective value of the dual iterate in the user's sense.
    pub dual_value: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// (primal, dual, residual term) at each iterate, user sense. The gap of
    /// the internal minimisation equals s'z / tau^2 plus the residual term, so
    /// weak duality holds at every iterate up to that term.
    pub history: Vec<(f64, f64, f64)>,
    pub certificate: Option<Certificate>,
    pub note: Option<String>,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

// ---------------------------------------------------------------------------
// internal standard form: min c'x, Ax = b, s = h - Gx in K

struct LpData {
    h: DVector<f64>,
    /// Rows of G (= -F).
    rows: Vec<Vec<(usize, f64)>>,
}

struct PsdData {
    dim: usize,
    h: DMatrix<f64>,
    /// Columns of G (= -F) as full symmetric entry lists.
    cols: Vec<(usize, Vec<(usize, usize, f64)>)>,
}

struct StdForm {
    n: usize,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    lp: Vec<LpData>,
    psd: Vec<PsdData>,
    /// Block order of the user problem: (is_psd, index into lp/psd).
    order: Vec<(bool, usize)>,
}

#[derive(Clone)]
struct CVec {
    lp: Vec<DVector<f64>>,
    psd: Vec<DMatrix<f64>>,
}

impl CVec {
    fn dot(&self, o: &CVec) -> f64 {
        let a: f64 = self.lp.iter().zip(&o.lp).map(|(u, v)| u.dot(v)).sum();
        let b: f64 = self.psd.iter().zip(&o.psd).map(|(u, v)| u.dot(v)).sum();
        a + b
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, alpha: f64, o: &CVec) {
        for (u, v) in self.lp.iter_mut().zip(&o.lp) {
            u.axpy(alpha, v, 1.0);
        }
        for (u, v) in self.psd.iter_mut().zip(&o.psd) {
            *u += v * alpha;
        }
    }

    fn scaled(&self, alpha: f64) -> CVec {
        CVec { lp: self.lp.iter().map(|u| u * alpha).collect(), psd: self.psd.iter().map(|u| u * alpha).collect() }
    }

    fn sub(&self, o: &CVec) -> CVec {
        let mut r = self.clone();
        r.axpy(-1.0, o);
        r
    }
}

fn full_entries(upper: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(upper.len() * 2);
    for &(i, j, v) in upper {
        out.push((i, j, v));
        if i != j {
            out.push((j, i, v));
        }
    }
    out
}

impl StdForm {
    fn from_problem(p: &ConicProblem) -> Result<StdForm> {
        let n = p.n;
        let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
        if p.c.len() != n || p.eq_rows.len() != p.b.len() {
            return Err(Error::InvalidInput("inconsistent conic problem sizes".into()));
        }
        let c = DVector::from_iterator(n, p.c.iter().map(|v| v * sign));
        let mut a = DMatrix::zeros(p.b.len(), n);
        for (r, row) in p.eq_rows.iter().enumerate() {
            for &(j, v) in row {
                if j >= n {
                    return Err(Error::InvalidInput(format!("variable index {j} out of range")));
                }
                a[(r, j)] += v;
            }
        }
        let b = DVector::from_column_slice(&p.b);
        let mut lp = Vec::new();
        let mut psd = Vec::new();
        let mut order = Vec::new();
        for blk in &p.blocks {
            match blk {
                ConeBlock::Nonneg { f0, rows } => {
                    if rows.len() != f0.len() {
                        return Err(Error::InvalidInput("nonneg block row count".into()));
                    }
                    let rows = rows
                        .iter()
                        .map(|r| {
                            if r.iter().any(|&(j, _)| j >= n) {
                                return Err(Error::InvalidInput("variable index out of range".into()));
                            }
                            Ok(r.iter().map(|&(j, v)| (j, -v)).collect())
                        })
                        .collect::<Result<Vec<_>>>()?;
                    order.push((false, lp.len()));
                    lp.push(LpData { h: DVector::from_column_slice(f0), rows });
                }
                ConeBlock::Psd { dim, f0, coeffs } => {
                    let d = *dim;
                    let mut h = DMatrix::zeros(d, d);
                    for &(i, j, v) in &full_entries(f0) {
                        if i >= d || j >= d {
                            return Err(Error::InvalidInput("psd entry out of range".into()));
                        }
                        h[(i, j)] += v;
                    }
                    let mut cols = Vec::new();
                    for (&j, ents) in coeffs {
                        if j >= n || ents.iter().any(|&(p, q, _)| p >= d || q >= d) {
                            return Err(Error::InvalidInput("psd coefficient out of range".into()));
                        }
                        let full: Vec<_> = full_entries(ents).into_iter().map(|(p, q, v)| (p, q, -v)).collect();
                        if !full.is_empty() {
                            cols.push((j, full));
                        }
                    }
                    order.push((true, psd.len()));
                    psd.push(PsdData { dim: d, h, cols });
                }
            }
        }
        Ok(StdForm { n, c, a, b, lp, psd, order })
    }

    fn degree(&self) -> usize {
        self.lp.iter().map(|l| l.h.len()).sum::<usize>() + self.psd.iter().map(|p| p.dim).sum::<usize>()
    }

    fn identity(&self) -> CVec {
        CVec {
            lp: self.lp.iter().map(|l| DVector::from_element(l.h.len(), 1.0)).collect(),
            psd: self.psd.iter().map(|p| DMatrix::identity(p.dim, p.dim)).collect(),
        }
    }

    fn h(&self) -> CVec {
        CVec { lp: self.lp.iter().map(|l| l.h.clone()).collect(), psd: self.psd.iter().map(|p| p.h.clone()).collect() }
    }

    fn g_mul(&self, x: &DVector<f64>) -> CVec {
        let lp = self
            .lp
            .iter()
            .map(|l| DVector::from_iterator(l.rows.len(), l.rows.iter().map(|r| r.iter().map(|&(j, v)| v * x[j]).sum())))
            .collect();
        let psd = self
            .psd
            .iter()
            .map(|p| {
                let mut m = DMatrix::zeros(p.dim, p.dim);
                for (j, ents) in &p.cols {
                    let xj = x[*j];
                    if xj != 0.0 {
                        for &(a, b, v) in ents {
                            m[(a, b)] += v * xj;
                        }
                    }
                }
                m
            })
            .collect();
        CVec { lp, psd }
    }

    fn gt_mul(&self, z: &CVec) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (l, zl) in self.lp.iter().zip(&z.lp) {
            for (r, row) in l.rows.iter().enumerate() {
                for &(j, v) in row {
                    out[j] += v * zl[r];
                }
            }
        }
        for (p, zp) in self.psd.iter().zip(&z.psd) {
            for (j, ents) in &p.cols {
                out[*j] += ents.iter().map(|&(a, b, v)| v * zp[(a, b)]).sum::<f64>();
            }
        }
        out
    }
}

enum Scale {
    Lp { w: DVector<f64>, lambda: DVector<f64> },
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64>, v: DMatrix<f64>, lambda: DVector<f64> },
}

struct Scaling {
    lp: Vec<Scale>,
    psd: Vec<Scale>,
}

fn nt_psd(s: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Scale> {
    let ls = s.clone().cholesky()?.l();
    let lz = z.clone().cholesky()?.l();
    let m = lz.transpose() * &ls;
    let svd = m.svd(true, true);
    let u = svd.u?;
    let vt = svd.v_t?;
    let lam = svd.singular_values;
    if lam.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return None;
    }
    let isq = lam.map(|x| 1.0 / x.sqrt());
    let dn = lam.len();
    let mut r = ls * vt.transpose();
    let mut rinv_t = lz * u;
    for k in 0..dn {
        r.column_mut(k).scale_mut(isq[k]);
        rinv_t.column_mut(k).scale_mut(isq[k]);
    }
    let rinv = rinv_t.transpose();
    let v = &rinv_t * &rinv;
    Some(Scale::Psd { r, rinv, v, lambda: lam })
}

impl Scaling {
    fn new(s: &CVec, z: &CVec) -> Option<Scaling> {
        let mut lp = Vec::new();
        for (sl, zl) in s.lp.iter().zip(&z.lp) {
            if sl.iter().chain(zl.iter()).any(|&v| !(v > 0.0)) {
                return None;
            }
            let w = sl.zip_map(zl, |a, b| (a / b).sqrt());
            let lambda = sl.zip_map(zl, |a, b| (a * b).sqrt());
            lp.push(Scale::Lp { w, lambda });
        }
        let mut psd = Vec::new();
        for (sp, zp) in s.psd.iter().zip(&z.psd) {
            psd.push(nt_psd(sp, zp)?);
        }
        Some(Scaling { lp, psd })
    }

    fn map(&self, u: &CVec, f_lp: impl Fn(&Scale, &DVector<f64>) -> DVector<f64>, f_psd: impl Fn(&Scale, &DMatrix<f64>) -> DMatrix<f64>) -> CVec {
        CVec {
            lp: self.lp.iter().zip(&u.lp).map(|(sc, v)| f_lp(sc, v)).collect(),
            psd: self.psd.iter().zip(&u.psd).map(|(sc, v)| f_psd(sc, v)).collect(),
        }
    }

    /// W z
    fn w(&self, u: &CVec) -> CVec {
        self.map(
            u,
            |sc, v| match sc {
                Scale::Lp { w, .. } => w.component_mul(v),
                _ => unreachable!(),
            },
            |sc, m| match sc {
                Scale::Psd { r, .. } => r.transpose() * m * r,
                _ => unreachable!(),
            },
        )
    }

    /// W^{-T} s
    fn winv_t(&self, u: &CVec) -> CVec {
        self.map(
            u,
            |sc, v| match sc {
                Scale::Lp { w, .. } => v.component_div(w),
                _ => unreachable!(),
            },
            |sc, m| match sc {
                Scale::Psd { rinv, .. } => rinv * m * rinv.transpose(),
                _ => unreachable!(),
            },
        )
    }

    /// W^T u
    fn wt(&self, u: &CVec) -> CVec {
        self.map(
            u,
            |sc, v| match sc {
                Scale::Lp { w, .. } => w.component_mul(v),
                _ => unreachable!(),
            },
            |sc, m| match sc {
                Scale::Psd { r, .. } => r * m * r.transpose(),
                _ => unreachable!(),
            },
        )
    }

    /// (W^T W)^{-1} u
    fn wtw_inv(&self, u: &CVec) -> CVec {
        self.map(
            u,
            |sc, v| match sc {
                Scale::Lp { w, .. } => v.component_div(&w.component_mul(w)),
                _ => unreachable!(),
            },
            |sc, m| match sc {
                Scale::Psd { v, .. } => v * m * v,
                _ => unreachable!(),
            },
        )
    }

    fn psd_lambda_mat(lambda: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(lambda)
    }

    fn lambda(&self) -> CVec {
        CVec {
            lp: self
                .lp
                .iter()
                .map(|s| match s {
                    Scale::Lp { lambda, .. } => lambda.clone(),
                    _ => unreachable!(),
                })
                .collect(),
            psd: self
                .psd
                .iter()
                .map(|s| match s {
                    Scale::Psd { lambda, .. } => Self::psd_lambda_mat(lambda),
                    _ => unreachable!(),
                })
                .collect(),
        }
    }

    /// Solve lambda o X = d in the scaled space.
    fn lambda_div(&self, d: &CVec) -> CVec {
        self.map(
            d,
            |sc, v| match sc {
                Scale::Lp { lambda, .. } => v.component_div(lambda),
                _ => unreachable!(),
            },
            |sc, m| match sc {
                Scale::Psd { lambda, .. } => {
                    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| 2.0 * m[(i, j)] / (lambda[i] + lambda[j]))
                }
                _ => unreachable!(),
            },
        )
    }

    /// Largest step keeping lambda + alpha * d in the cone (infinite if unbounded).
    fn max_step(&self, d: &CVec) -> f64 {
        let mut alpha = f64::INFINITY;
        for (sc, v) in self.lp.iter().zip(&d.lp) {
            if let Scale::Lp { lambda, .. } = sc {
                for i in 0..v.len() {
                    if v[i] < 0.0 {
                        alpha = alpha.min(-lambda[i] / v[i]);
                    }
                }
            }
        }
        for (sc, m) in self.psd.iter().zip(&d.psd) {
            if let Scale::Psd { lambda, .. } = sc {
                let isq = lambda.map(|x| 1.0 / x.sqrt());
                let t = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]) * isq[i] * isq[j]);
                let mn = match crate::linalg::symmetric_eigenvalues(&t) {
                    Ok(ev) => ev.iter().copied().fold(f64::INFINITY, f64::min),
                    Err(_) => t.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min),
                };
                if mn < 0.0 {
                    alpha = alpha.min(-1.0 / mn);
                }
            }
        }
        alpha
    }
}

fn circ(u: &CVec, v: &CVec) -> CVec {
    CVec {
        lp: u.lp.iter().zip(&v.lp).map(|(a, b)| a.component_mul(b)).collect(),
        psd: u.psd.iter().zip(&v.psd).map(|(a, b)| (a * b + b * a) * 0.5).collect(),
    }
}

struct Kkt {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    full: DMatrix<f64>,
    n: usize,
}

impl StdForm {
    fn assemble_kkt(&self, sc: &Scaling) -> Option<Kkt> {
        let n = self.n;
        let p = self.b.len();
        let mut hm = DMatrix::<f64>::zeros(n, n);
        for (l, s) in self.lp.iter().zip(&sc.lp) {
            if let Scale::Lp { w, .. } = s {
                for (r, row) in l.rows.iter().enumerate() {
                    let wt = 1.0 / (w[r] * w[r]);
                    for &(i, vi) in row {
                        for &(j, vj) in row {
                            hm[(i, j)] += wt * vi * vj;
                        }
                    }
                }
            }
        }
        for (pd, s) in self.psd.iter().zip(&sc.psd) {
            if let Scale::Psd { v, .. } = s {
                let d = pd.dim;
                let mut bm = DMatrix::<f64>::zeros(d, d);
                for (jj, (vj, gj)) in pd.cols.iter().enumerate() {
                    bm.fill(0.0);
                    for &(a, b, g) in gj {
                        bm.ger(g, &v.column(a), &v.column(b), 1.0);
                    }
                    for (vi, gi) in pd.cols[..=jj].iter() {
                        let val: f64 = gi.iter().map(|&(a, b, g)| g * bm[(a, b)]).sum();
                        hm[(*vi, *vj)] += val;
                        if vi != vj {
                            hm[(*vj, *vi)] += val;
                        }
                    }
                }
            }
        }
        let scale = (0..n).fold(1.0f64, |m, i| m.max(hm[(i, i)].abs()));
        let delta = 1e-15 * scale;
        let delta_eq = 1e-13;
        let mut full = DMatrix::<f64>::zeros(n + p, n + p);
        full.view_mut((0, 0), (n, n)).copy_from(&hm);
        full.view_mut((n, 0), (p, n)).copy_from(&self.a);
        full.view_mut((0, n), (n, p)).copy_from(&self.a.transpose());
        let mut reg = full.clone();
        for i in 0..n {
            reg[(i, i)] += delta;
        }
        for i in n..n + p {
            reg[(i, i)] -= delta_eq;
        }
        let lu = reg.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Kkt { lu, full, n })
    }

    fn solve_reduced(&self, kkt: &Kkt, sc: &Scaling, r1: &DVector<f64>, r2: &DVector<f64>, r3: &CVec) -> Option<(DVector<f64>, DVector<f64>, CVec)> {
        let n = kkt.n;
        let p = r2.len();
        let t = sc.wtw_inv(r3);
        let top = r1 - self.gt_mul(&t);
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&top);
        rhs.rows_mut(n, p).copy_from(&(-r2));
        let mut sol = kkt.lu.solve(&rhs)?;
        let res = &rhs - &kkt.full * &sol;
        sol += kkt.lu.solve(&res)?;
        let dx = sol.rows(0, n).into_owned();
        let dy = sol.rows(n, p).into_owned();
        let mut gdx = self.g_mul(&dx);
        gdx.axpy(1.0, r3);
        let dz = sc.wtw_inv(&gdx);
        Some((dx, dy, dz))
    }

    /// Solve [0 A' G'; -A 0 0; -G 0 W'W] (dx, dy, dz) = (r1, r2, r3) with
    /// iterative refinement on the unreduced system.
    fn solve_kkt(&self, kkt: &Kkt, sc: &Scaling, r1: &DVector<f64>, r2: &DVector<f64>, r3: &CVec) -> Option<(DVector<f64>, DVector<f64>, CVec)> {
        let (mut dx, mut dy, mut dz) = self.solve_reduced(kkt, sc, r1, r2, r3)?;
        let scale = 1.0 + r1.amax().max(r2.amax()).max(r3.norm());
        let mut last = f64::INFINITY;
        for _ in 0..4 {
            let e1 = r1 - (self.a.transpose() * &dy + self.gt_mul(&dz));
            let e2 = r2 + &self.a * &dx;
            let mut e3 = r3.clone();
            e3.axpy(1.0, &self.g_mul(&dx));
            e3.axpy(-1.0, &sc.wt(&sc.w(&dz)));
            let err = e1.amax().max(e2.amax()).max(e3.norm());
            if err <= 1e-14 * scale || err >= last {
                break;
            }
            last = err;
            let (cx, cy, cz) = self.solve_reduced(kkt, sc, &e1, &e2, &e3)?;
            dx += cx;
            dy += cy;
            dz.axpy(1.0, &cz);
        }
        if dx.iter().chain(dy.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        Some((dx, dy, dz))
    }

    fn blocks_out(&self, v: &CVec) -> Vec<BlockValue> {
        self.order
            .iter()
            .map(|&(is_psd, k)| if is_psd { BlockValue::Psd(v.psd[k].clone()) } else { BlockValue::Nonneg(v.lp[k].iter().copied().collect()) })
            .collect()
    }
}

impl ConicProblem {
    pub fn solve(&self, opts: &SolverOptions) -> Result<ConicSolution> {
        let sf = StdForm::from_problem(self)?;
        Ok(ipm(&sf, self.sense, opts))
    }
}

/// A stalled run is still reported optimal if its best iterate is within this
/// factor of every tolerance.
const STALL_ACCEPT: f64 = 10.0;

fn ipm(sf: &StdForm, sense: Sense, opts: &SolverOptions) -> ConicSolution {
    let n = sf.n;
    let p = sf.b.len();
    let deg = sf.degree() as f64;
    let h = sf.h();
    let bnorm = sf.b.norm();
    let hnorm = h.norm();
    let cnorm = sf.c.norm();

    let trace = std::env::var_os("QRNORM_TRACE").is_some();
    let mut x = DVector::<f64>::zeros(n);
    let mut y = DVector::<f64>::zeros(p);
    let mut s = sf.identity();
    let mut z = sf.identity();
    let mut tau = 1.0f64;
    let mut kappa = 1.0f64;

    let sign = if sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut status = SolveStatus::MaxIterations;
    let mut certificate = None;
    let mut note = None;
    let mut iters = 0;
    let (mut pres, mut dres, mut pobj, mut dobj) = (f64::INFINITY, f64::INFINITY, f64::NAN, f64::NAN);
    let mut history = Vec::new();
    // best iterate by the worst ratio of gap and residuals to their tolerances
    let mut best: Option<(f64, usize, DVector<f64>, DVector<f64>, CVec, f64, [f64; 4])> = None;

    for it in 0..=opts.max_iter {
        iters = it;
        // residuals of the embedding
        let gx = sf.g_mul(&x);
        let gtz = sf.gt_mul(&z);
        let ax = &sf.a * &x;
        let aty = sf.a.transpose() * &y;
        let rx = &aty + &gtz + &sf.c * tau;
        let ry = -&ax + &sf.b * tau;
        let mut rz = h.scaled(tau).sub(&gx);
        rz.axpy(-1.0, &s);
        let cx = sf.c.dot(&x);
        let by = sf.b.dot(&y);
        let hz = h.dot(&z);
        let rt = -cx - by - hz - kappa;
        let sz = s.dot(&z);
        let mu = (sz + tau * kappa) / (deg + 1.0);

        pres = (ry.norm() / (tau * (1.0 + bnorm))).max(rz.norm() / (tau * (1.0 + hnorm)));
        dres = rx.norm() / (tau * (1.0 + cnorm));
        pobj = cx / tau;
        dobj = -(by + hz) / tau;
        let gap = (pobj - dobj).abs();
        let resid_term = (x.dot(&rx) + y.dot(&ry) + z.dot(&rz)) / (tau * tau);
        history.push((sign * pobj, sign * dobj, resid_term));
        let merit = (pres / opts.feas_tol).max(dres / opts.feas_tol).max(gap / (opts.gap_tol * pobj.abs().min(dobj.abs()).max(1.0)));
        if merit.is_finite() && best.as_ref().map_or(true, |b| merit < b.0) {
            best = Some((merit, it, x.clone(), y.clone(), z.clone(), tau, [pobj, dobj, pres, dres]));
        }
        if trace {
            eprintln!("it {it:3} pobj {pobj:+.10e} dobj {dobj:+.10e} pres {pres:.2e} dres {dres:.2e} tau {tau:.2e} kap {kappa:.2e} mu {mu:.2e}");
        }
        if pres <= opts.feas_tol && dres <= opts.feas_tol && gap <= opts.gap_tol * pobj.abs().min(dobj.abs()).max(1.0) {
            status = SolveStatus::Optimal;
            break;
        }
        if tau < kappa {
            if by + hz < 0.0 {
                let scale = -(by + hz);
                if (&aty + &gtz).norm() / scale <= opts.feas_tol {
                    status = SolveStatus::Infeasible;
                    certificate = Some(Certificate::PrimalInfeasible {
                        y: (&y / scale).iter().copied().collect(),
                        z: sf.blocks_out(&z.scaled(1.0 / scale)),
                    });
                    break;
                }
            }
            if cx < 0.0 {
                let scale = -cx;
                let mut gxs = gx.clone();
                gxs.axpy(1.0, &s);
                if ax.norm().max(gxs.norm()) / scale <= opts.feas_tol {
                    status = SolveStatus::Unbounded;
                    certificate = Some(Certificate::DualInfeasible { x: (&x / scale).iter().copied().collect() });
                    break;
                }
            }
        }
        if it == opts.max_iter {
            break;
        }

        let Some(sc) = Scaling::new(&s, &z) else {
            note = Some("iterate left the cone interior".into());
            break;
        };
        let Some(kkt) = sf.assemble_kkt(&sc) else {
            note = Some("singular KKT system".into());
            break;
        };
        let lam = sc.lambda();
        let hvec = h.clone();
        let Some((x1, y1, z1)) = sf.solve_kkt(&kkt, &sc, &(-&sf.c), &(-&sf.b), &hvec.scaled(-1.0)) else {
            note = Some("KKT solve failed".into());
            break;
        };
        let denom_base = sf.c.dot(&x1) + sf.b.dot(&y1) + h.dot(&z1);

        // direction for (eta, ds, dk)
        let direction = |eta: f64, ds: &CVec, dk: f64| -> Option<(DVector<f64>, DVector<f64>, CVec, CVec, f64, f64)> {
            let ld = sc.lambda_div(ds);
            let wl = sc.wt(&ld);
            let mut r3 = rz.scaled(-eta);
            r3.axpy(-1.0, &wl);
            let (x2, y2, z2) = sf.solve_kkt(&kkt, &sc, &(-&rx * eta), &(-&ry * eta), &r3)?;
            let num = -eta * rt - dk / tau + sf.c.dot(&x2) + sf.b.dot(&y2) + h.dot(&z2);
            let den = kappa / tau - denom_base;
            let dtau = num / den;
            let dx = &x2 + &x1 * dtau;
            let dy = &y2 + &y1 * dtau;
            let mut dz = z2;
            dz.axpy(dtau, &z1);
            // ds from the linearised primal equation; equivalent to
            // -W'(lambda \ d_s) - W'W dz but free of cancellation
            let mut dsv = sf.g_mul(&dx).scaled(-1.0);
            dsv.axpy(dtau, &h);
            dsv.axpy(eta, &rz);
            let dkap = -(dk + kappa * dtau) / tau;
            Some((dx, dy, dz, dsv, dtau, dkap))
        };

        let step_len = |dz: &CVec, ds: &CVec, dtau: f64, dkap: f64| -> f64 {
            let mut a = sc.max_step(&sc.winv_t(ds)).min(sc.max_step(&sc.w(dz)));
            if dtau < 0.0 {
                a = a.min(-tau / dtau);
            }
            if dkap < 0.0 {
                a = a.min(-kappa / dkap);
            }
            a
        };

        let lam_sq = circ(&lam, &lam);
        let Some((_, _, dza, dsa, dta, dka)) = direction(1.0, &lam_sq, tau * kappa) else {
            note = Some("KKT solve failed".into());
            break;
        };
        let alpha_a = step_len(&dza, &dsa, dta, dka).min(1.0);
        let sigma = (1.0 - alpha_a).powi(3).clamp(1e-6, 1.0);

        let mut ds_c = lam_sq.clone();
        ds_c.axpy(1.0, &circ(&sc.winv_t(&dsa), &sc.w(&dza)));
        let e = sf.identity();
        ds_c.axpy(-sigma * mu, &e);
        let dk_c = tau * kappa + dta * dka - sigma * mu;
        let Some((dx, dy, dz, dsv, dtau, dkap)) = direction(1.0 - sigma, &ds_c, dk_c) else {
            note = Some("KKT solve failed".into());
            break;
        };
        let alpha = (0.98 * step_len(&dz, &dsv, dtau, dkap)).min(1.0);
        if !(alpha > 1e-12) {
            note = Some("step length collapsed".into());
            break;
        }
        x += &dx * alpha;
        y += &dy * alpha;
        z.axpy(alpha, &dz);
        s.axpy(alpha, &dsv);
        tau += alpha * dtau;
        kappa += alpha * dkap;
        // symmetrise PSD iterates against round-off drift
        for m in s.psd.iter_mut().chain(z.psd.iter_mut()) {
            let t = (m.clone() + m.transpose()) * 0.5;
            *m = t;
        }
    }

    if status == SolveStatus::MaxIterations {
        if let Some((merit, k, bx, by, bz, bt, [po, d, pr, dr])) = best {
            if merit <= STALL_ACCEPT {
                let why = note.take().unwrap_or_else(|| "iteration cap".into());
                note = Some(format!("{why}; accepted iterate {k} at reduced accuracy ({merit:.2} x tolerance)"));
                status = SolveStatus::Optimal;
            }
            (x, y, z, tau) = (bx, by, bz, bt);
            (pobj, dobj, pres, dres) = (po, d, pr, dr);
        }
    }
    let xs: Vec<f64> = (&x / tau).iter().copied().collect();
    let ys: Vec<f64> = (&y / tau).iter().copied().collect();
    // report the slack as the affine expression at x (not the iterate s)
    let slack = {
        let gx = sf.g_mul(&(&x / tau));
        h.sub(&gx)
    };
    ConicSolution {
        status,
        x: xs,
        y: ys,
        z: sf.blocks_out(&z.scaled(1.0 / tau)),
        s: sf.blocks_out(&slack),
        primal_value: sign * pobj,
        dual_value: sign * dobj,
        gap: (pobj - dobj).abs(),
        primal_residual: pres,
        dual_residual: dres,
        iterations: iters,
        history,
        certificate,
        note,
    }
}

// ---------------------------------------------------------------------------
// modelling layer

/// Affine scalar expression in the model variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: BTreeMap<usize, f64>,
}

impl LinExpr {
    pub fn var(i: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(i, 1.0);
        LinExpr { constant: 0.0, terms }
    }

    pub fn constant(v: f64) -> Self {
        LinExpr { constant: v, terms: BTreeMap::new() }
    }

    pub fn add_term(&mut self, i: usize, v: f64) {
        if v != 0.0 {
            *self.terms.entry(i).or_insert(0.0) += v;
        }
    }

    pub fn plus(&self, o: &LinExpr) -> LinExpr {
        let mut r = self.clone();
        r.constant += o.constant;
        for (&i, &v) in &o.terms {
            r.add_term(i, v);
        }
        r
    }

    pub fn minus(&self, o: &LinExpr) -> LinExpr {
        self.plus(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> LinExpr {
        LinExpr { constant: self.constant * s, terms: self.terms.iter().map(|(&i, &v)| (i, v * s)).collect() }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(&i, &v)| v * x[i]).sum::<f64>()
    }
}

type Entries = BTreeMap<(usize, usize), C64>;

fn add_entries(dst: &mut Entries, src: &Entries, s: C64) {
    for (&k, &v) in src {
        *dst.entry(k).or_insert(C64::default()) += v * s;
    }
}

/// Affine complex matrix expression `M0 + sum_j x_j M_j` with sparse coefficients.
#[derive(Clone, Debug)]
pub struct MatExpr {
    pub rows: usize,
    pub cols: usize,
    pub constant: Entries,
    pub terms: BTreeMap<usize, Entries>,
}

impl MatExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatExpr { rows, cols, constant: BTreeMap::new(), terms: BTreeMap::new() }
    }

    pub fn from_operator(op: &Operator) -> Self {
        let mut e = MatExpr::zeros(op.rows(), op.cols());
        for i in 0..op.rows() {
            for j in 0..op.cols() {
                let v = op.get(i, j);
                if v != C64::default() {
                    e.constant.insert((i, j), v);
                }
            }
        }
        e
    }

    /// `expr * I_n` for a scalar affine expression.
    pub fn scaled_identity(expr: &LinExpr, n: usize) -> Self {
        let mut e = MatExpr::zeros(n, n);
        let diag = |v: f64| (0..n).filter(|_| v != 0.0).map(|i| ((i, i), c(v, 0.0))).collect::<Entries>();
        e.constant = diag(expr.constant);
        for (&j, &v) in &expr.terms {
            if v != 0.0 {
                e.terms.insert(j, diag(v));
            }
        }
        e
    }

    pub fn plus(&self, o: &MatExpr) -> MatExpr {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "matrix expression shapes differ");
        let mut r = self.clone();
        add_entries(&mut r.constant, &o.constant, c(1.0, 0.0));
        for (&j, ent) in &o.terms {
            add_entries(r.terms.entry(j).or_default(), ent, c(1.0, 0.0));
        }
        r
    }

    pub fn scale(&self, s: f64) -> MatExpr {
        self.scale_c(c(s, 0.0))
    }

    pub fn scale_c(&self, s: C64) -> MatExpr {
        let mut r = MatExpr::zeros(self.rows, self.cols);
        add_entries(&mut r.constant, &self.constant, s);
        for (&j, ent) in &self.terms {
            add_entries(r.terms.entry(j).or_default(), ent, s);
        }
        r
    }

    pub fn minus(&self, o: &MatExpr) -> MatExpr {
        self.plus(&o.scale(-1.0))
    }

    /// Relabel entries with `f(i, j) -> (i', j')`; used for partial transposes and realignments.
    pub fn map_indices(&self, rows: usize, cols: usize, f: impl Fn(usize, usize) -> (usize, usize)) -> MatExpr {
        let m = |ent: &Entries| ent.iter().map(|(&(i, j), &v)| (f(i, j), v)).collect::<Entries>();
        MatExpr { rows, cols, constant: m(&self.constant), terms: self.terms.iter().map(|(&j, e)| (j, m(e))).collect() }
    }

    pub fn adjoint(&self) -> MatExpr {
        let m = |ent: &Entries| ent.iter().map(|(&(i, j), &v)| ((j, i), v.conj())).collect::<Entries>();
        MatExpr { rows: self.cols, cols: self.rows, constant: m(&self.constant), terms: self.terms.iter().map(|(&j, e)| (j, m(e))).collect() }
    }

    /// 2x2 block matrix [[a, b], [c, d]].
    pub fn block2(a: &MatExpr, b: &MatExpr, cc: &MatExpr, d: &MatExpr) -> MatExpr {
        assert!(a.rows == b.rows && cc.rows == d.rows && a.cols == cc.cols && b.cols == d.cols, "block shapes");
        let (r0, c0) = (a.rows, a.cols);
        let mut out = MatExpr::zeros(a.rows + cc.rows, a.cols + b.cols);
        for (blk, dr, dc) in [(a, 0, 0), (b, 0, c0), (cc, r0, 0), (d, r0, c0)] {
            let shifted = blk.map_indices(out.rows, out.cols, |i, j| (i + dr, j + dc));
            out = out.plus(&shifted);
        }
        out
    }

    /// Partial transpose on the second factor of a dA*dB square expression.
    pub fn partial_transpose_b(&self, da: usize, db: usize) -> MatExpr {
        self.map_indices(self.rows, self.cols, |r, cc| {
            let (i, j) = (r / db, r % db);
            let (k, l) = (cc / db, cc % db);
            (i * db + l, k * db + j)
        })
        .checked(da * db)
    }

    /// Realignment (dA^2 x dB^2) of a bipartite square expression.
    pub fn reshuffle(&self, da: usize, db: usize) -> MatExpr {
        self.map_indices(da * da, db * db, |r, cc| {
            let (i, j) = (r / db, r % db);
            let (k, l) = (cc / db, cc % db);
            (i * da + k, j * db + l)
        })
    }

    fn checked(self, n: usize) -> MatExpr {
        debug_assert_eq!(self.rows, n);
        self
    }

    /// Re Tr(O^dagger M) as an affine expression.
    pub fn re_inner(&self, o: &Operator) -> LinExpr {
        let f = |ent: &Entries| ent.iter().map(|(&(i, j), &v)| (o.get(i, j).conj() * v).re).sum::<f64>();
        let mut e = LinExpr::constant(f(&self.constant));
        for (&j, ent) in &self.terms {
            e.add_term(j, f(ent));
        }
        e
    }

    /// Real and imaginary parts of entry (i, j).
    pub fn entry(&self, i: usize, j: usize) -> (LinExpr, LinExpr) {
        let g = |ent: &Entries| ent.get(&(i, j)).copied().unwrap_or_default();
        let k = self.constant.get(&(i, j)).copied().unwrap_or_default();
        let mut re = LinExpr::constant(k.re);
        let mut im = LinExpr::constant(k.im);
        for (&v, ent) in &self.terms {
            let z = g(ent);
            re.add_term(v, z.re);
            im.add_term(v, z.im);
        }
        (re, im)
    }

    /// `B M B^dagger` for a d x k matrix `B` and k x k expression `M`.
    pub fn congruence(&self, b: &DMatrix<C64>) -> MatExpr {
        assert_eq!((self.rows, self.cols), (b.ncols(), b.ncols()), "congruence shape");
        let d = b.nrows();
        let map = |ent: &Entries| {
            let mut out = Entries::new();
            for (&(i, j), &v) in ent {
                for p in 0..d {
                    let bp = b[(p, i)] * v;
                    if bp == C64::default() {
                        continue;
                    }
                    for q in 0..d {
                        let z = bp * b[(q, j)].conj();
                        if z != C64::default() {
                            *out.entry((p, q)).or_insert(C64::default()) += z;
                        }
                    }
                }
            }
            out
        };
        MatExpr { rows: d, cols: d, constant: map(&self.constant), terms: self.terms.iter().map(|(&j, e)| (j, map(e))).collect() }
    }

    pub fn trace(&self) -> LinExpr {
        (0..self.rows.min(self.cols)).fold(LinExpr::default(), |acc, i| acc.plus(&self.entry(i, i).0))
    }

    pub fn eval(&self, x: &[f64]) -> Operator {
        let mut m = DMatrix::<C64>::zeros(self.rows, self.cols);
        for (&(i, j), &v) in &self.constant {
            m[(i, j)] += v;
        }
        for (&k, ent) in &self.terms {
            for (&(i, j), &v) in ent {
                m[(i, j)] += v * x[k];
            }
        }
        Operator::new(m)
    }

    fn hermitian_defect(&self) -> f64 {
        let d = |ent: &Entries| {
            ent.iter()
                .map(|(&(i, j), &v)| (v - ent.get(&(j, i)).copied().unwrap_or_default().conj()).norm())
                .fold(0.0, f64::max)
        };
        self.terms.values().map(d).fold(d(&self.constant), f64::max)
    }

    fn is_real(&self) -> bool {
        self.constant.values().chain(self.terms.values().flat_map(|e| e.values())).all(|v| v.im == 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockId(pub usize);

#[derive(Clone, Debug)]
enum BlockInfo {
    Nonneg,
    Psd { n: usize, embedded: bool },
}

/// Builder that lowers affine expressions to a [`ConicProblem`].
#[derive(Clone, Debug)]
pub struct Model {
    n: usize,
    sense: Sense,
    objective: LinExpr,
    eqs: Vec<(LinExpr, f64)>,
    blocks: Vec<ConeBlock>,
    info: Vec<BlockInfo>,
}

impl Default for Model {
    fn default() -> Self {
        Model::new()
    }
}

impl Model {
    pub fn new() -> Self {
        Model { n: 0, sense: Sense::Minimize, objective: LinExpr::default(), eqs: vec![], blocks: vec![], info: vec![] }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn add_var(&mut self) -> LinExpr {
        self.n += 1;
        LinExpr::var(self.n - 1)
    }

    /// Hermitian n x n matrix variable (n^2 real parameters).
    pub fn hermitian_var(&mut self, n: usize) -> MatExpr {
        let mut e = MatExpr::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                if a == b {
                    let v = self.add_var().terms.into_keys().next().unwrap();
                    e.terms.insert(v, [((a, a), c(1.0, 0.0))].into_iter().collect());
                } else {
                    let vr = self.add_var().terms.into_keys().next().unwrap();
                    let vi = self.add_var().terms.into_keys().next().unwrap();
                    e.terms.insert(vr, [((a, b), c(1.0, 0.0)), ((b, a), c(1.0, 0.0))].into_iter().collect());
                    e.terms.insert(vi, [((a, b), c(0.0, 1.0)), ((b, a), c(0.0, -1.0))].into_iter().collect());
                }
            }
        }
        e
    }

    pub fn minimize(&mut self, obj: LinExpr) {
        self.sense = Sense::Minimize;
        self.objective = obj;
    }

    pub fn maximize(&mut self, obj: LinExpr) {
        self.sense = Sense::Maximize;
        self.objective = obj;
    }

    /// expr == rhs
    pub fn add_eq(&mut self, expr: &LinExpr, rhs: f64) {
        self.eqs.push((expr.clone(), rhs));
    }

    /// Every expression >= 0, as one nonnegative block.
    pub fn add_nonneg(&mut self, exprs: &[LinExpr]) -> BlockId {
        let f0 = exprs.iter().map(|e| e.constant).collect();
        let rows = exprs.iter().map(|e| e.terms.iter().filter(|(_, &v)| v != 0.0).map(|(&j, &v)| (j, v)).collect()).collect();
        self.blocks.push(ConeBlock::Nonneg { f0, rows });
        self.info.push(BlockInfo::Nonneg);
        BlockId(self.blocks.len() - 1)
    }

    /// lhs <= rhs
    pub fn add_le(&mut self, lhs: &LinExpr, rhs: &LinExpr) -> BlockId {
        self.add_nonneg(&[rhs.minus(lhs)])
    }

    /// Hermitian expression is PSD. Real-valued expressions become an n x n
    /// real block; complex ones are embedded into a 2n x 2n real block.
    pub fn add_psd(&mut self, m: &MatExpr) -> Result<BlockId> {
        if m.rows != m.cols {
            return Err(Error::DimensionMismatch("PSD constraint on a non-square expression".into()));
        }
        let defect = m.hermitian_defect();
        if defect > 1e-12 {
            return Err(Error::NotHermitian(defect));
        }
        let n = m.rows;
        let embedded = !m.is_real();
        let lower = |ent: &Entries| -> Vec<(usize, usize, f64)> {
            let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            for (&(i, j), &v) in ent {
                if embedded {
                    for (p, q, val) in [(i, j, v.re), (i + n, j + n, v.re), (i + n, j, v.im), (i, j + n, -v.im)] {
                        if p <= q && val != 0.0 {
                            *acc.entry((p, q)).or_insert(0.0) += val;
                        }
                    }
                } else if i <= j && v.re != 0.0 {
                    *acc.entry((i, j)).or_insert(0.0) += v.re;
                }
            }
            acc.into_iter().filter(|(_, v)| *v != 0.0).map(|((i, j), v)| (i, j, v)).collect()
        };
        let f0 = lower(&m.constant);
        let coeffs = m.terms.iter().map(|(&j, e)| (j, lower(e))).filter(|(_, e)| !e.is_empty()).collect();
        self.blocks.push(ConeBlock::Psd { dim: if embedded { 2 * n } else { n }, f0, coeffs });
        self.info.push(BlockInfo::Psd { n, embedded });
        Ok(BlockId(self.blocks.len() - 1))
    }

    pub fn to_problem(&self) -> ConicProblem {
        let mut c = vec![0.0; self.n];
        for (&j, &v) in &self.objective.terms {
            c[j] += v;
        }
        let eq_rows = self.eqs.iter().map(|(e, _)| e.terms.iter().map(|(&j, &v)| (j, v)).collect()).collect();
        let b = self.eqs.iter().map(|(e, r)| r - e.constant).collect();
        ConicProblem { n: self.n, sense: self.sense, c, eq_rows, b, blocks: self.blocks.clone() }
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<ModelSolution> {
        let raw = self.to_problem().solve(opts)?;
        Ok(ModelSolution { objective_constant: self.objective.constant, info: self.info.clone(), raw })
    }
}

#[derive(Clone, Debug)]
pub struct ModelSolution {
    objective_constant: f64,
    info: Vec<BlockInfo>,
    pub raw: ConicSolution,
}

impl ModelSolution {
    pub fn status(&self) -> SolveStatus {
        self.raw.status
    }

    pub fn is_optimal(&self) -> bool {
        self.raw.is_optimal()
    }

    pub fn primal_value(&self) -> f64 {
        self.raw.primal_value + self.objective_constant
    }

    pub fn dual_value(&self) -> f64 {
        self.raw.dual_value + self.objective_constant
    }

    pub fn value(&self, e: &LinExpr) -> f64 {
        e.eval(&self.raw.x)
    }

    pub fn eval(&self, m: &MatExpr) -> Operator {
        m.eval(&self.raw.x)
    }

    /// Cone multiplier of a Hermitian PSD block, folded back to complex form.
    pub fn psd_dual(&self, id: BlockId) -> Option<Operator> {
        let BlockValue::Psd(zm) = &self.raw.z[id.0] else { return None };
        let BlockInfo::Psd { n, embedded } = self.info[id.0] else { return None };
        Some(if embedded {
            Operator::from_fn(n, n, |i, j| {
                c(0.5 * (zm[(i, j)] + zm[(i + n, j + n)]), 0.5 * (zm[(i + n, j)] - zm[(i, j + n)]))
            })
        } else {
            Operator::from_fn(n, n, |i, j| c(zm[(i, j)], 0.0))
        })
    }

    pub fn lp_dual(&self, id: BlockId) -> Option<Vec<f64>> {
        match &self.raw.z[id.0] {
            BlockValue::Nonneg(v) => Some(v.clone()),
            _ => None,
        }
    }

    /// Checked optimal value: errors unless the solver certified optimality.
    pub fn certified_value(&self) -> Result<f64> {
        if self.is_optimal() {
            Ok(self.primal_value())
        } else {
            Err(Error::Solver(format!(
                "status {} after {} iterations (gap {:.2e}, residuals {:.2e}/{:.2e}){}",
                self.raw.status.as_str(),
                self.raw.iterations,
                self.raw.gap,
                self.raw.primal_residual,
                self.raw.dual_residual,
                self.raw.note.as_ref().map(|n| format!(": {n}")).unwrap_or_default()
            )))
        }
    }
}

// ---------------------------------------------------------------------------
// plain-text dump
//
//   conic 1
//   sense max|min
//   vars <n>
//   obj <j> <v>                       (repeated)
//   eq <row> <j> <v> / rhs <row> <v>  (repeated)
//   lp <len>     then   f <row> <j|-> <v>
//   psd <dim>    then   f <i> <j> <var|-> <v>   with i <= j
//   end

impl ConicProblem {
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "conic 1");
        let _ = writeln!(out, "sense {}", if self.sense == Sense::Maximize { "max" } else { "min" });
        let _ = writeln!(out, "vars {}", self.n);
        for (j, v) in self.c.iter().enumerate() {
            if *v != 0.0 {
                let _ = writeln!(out, "obj {j} {v:e}");
            }
        }
        let _ = writeln!(out, "eqs {}", self.b.len());
        for (r, row) in self.eq_rows.iter().enumerate() {
            for &(j, v) in row {
                let _ = writeln!(out, "eq {r} {j} {v:e}");
            }
            let _ = writeln!(out, "rhs {r} {:e}", self.b[r]);
        }
        for blk in &self.blocks {
            match blk {
                ConeBlock::Nonneg { f0, rows } => {
                    let _ = writeln!(out, "lp {}", f0.len());
                    for (r, row) in rows.iter().enumerate() {
                        if f0[r] != 0.0 {
                            let _ = writeln!(out, "f {r} - {:e}", f0[r]);
                        }
                        for &(j, v) in row {
                            let _ = writeln!(out, "f {r} {j} {v:e}");
                        }
                    }
                }
                ConeBlock::Psd { dim, f0, coeffs } => {
                    let _ = writeln!(out, "psd {dim}");
                    for &(i, j, v) in f0 {
                        let _ = writeln!(out, "f {i} {j} - {v:e}");
                    }
                    for (var, ents) in coeffs {
                        for &(i, j, v) in ents {
                            let _ = writeln!(out, "f {i} {j} {var} {v:e}");
                        }
                    }
                }
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_dump(text: &str) -> Result<ConicProblem> {
        let bad = |ln: usize, msg: &str| Error::InvalidInput(format!("dump line {}: {msg}", ln + 1));
        let mut p = ConicProblem { n: 0, sense: Sense::Minimize, c: vec![], eq_rows: vec![], b: vec![], blocks: vec![] };
        let mut saw_header = false;
        let mut ended = false;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            let num = |k: usize| -> Result<f64> {
                let v: f64 = tok.get(k).ok_or_else(|| bad(ln, "missing field"))?.parse().map_err(|_| bad(ln, "bad number"))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(bad(ln, "non-finite value"))
                }
            };
            let idx = |k: usize| -> Result<Option<usize>> {
                let t = *tok.get(k).ok_or_else(|| bad(ln, "missing field"))?;
                if t == "-" {
                    Ok(None)
                } else {
                    t.parse().map(Some).map_err(|_| bad(ln, "bad index"))
                }
            };
            let need = |k: usize| -> Result<usize> { idx(k)?.ok_or_else(|| bad(ln, "index required")) };
            if !saw_header {
                if tok != ["conic", "1"] {
                    return Err(bad(ln, "expected header 'conic 1'"));
                }
                saw_header = true;
                continue;
            }
            if ended {
                return Err(bad(ln, "content after 'end'"));
            }
            match tok[0] {
                "sense" => {
                    p.sense = match tok.get(1).copied() {
                        Some("max") => Sense::Maximize,
                        Some("min") => Sense::Minimize,
                        _ => return Err(bad(ln, "sense must be max or min")),
                    }
                }
                "vars" => {
                    p.n = need(1)?;
                    p.c = vec![0.0; p.n];
                }
                "obj" => {
                    let j = need(1)?;
                    if j >= p.n {
                        return Err(bad(ln, "objective index out of range"));
                    }
                    p.c[j] += num(2)?;
                }
                "eqs" => {
                    let m = need(1)?;
                    p.eq_rows = vec![vec![]; m];
                    p.b = vec![0.0; m];
                }
                "eq" => {
                    let (r, j) = (need(1)?, need(2)?);
                    if r >= p.b.len() || j >= p.n {
                        return Err(bad(ln, "equality index out of range"));
                    }
                    p.eq_rows[r].push((j, num(3)?));
                }
                "rhs" => {
                    let r = need(1)?;
                    if r >= p.b.len() {
                        return Err(bad(ln, "rhs index out of range"));
                    }
                    p.b[r] = num(2)?;
                }
                "lp" => {
                    let k = need(1)?;
                    p.blocks.push(ConeBlock::Nonneg { f0: vec![0.0; k], rows: vec![vec![]; k] });
                }
                "psd" => {
                    p.blocks.push(ConeBlock::Psd { dim: need(1)?, f0: vec![], coeffs: BTreeMap::new() });
                }
                "f" => {
                    let n = p.n;
                    match p.blocks.last_mut() {
                        Some(ConeBlock::Nonneg { f0, rows }) => {
                            let r = need(1)?;
                            if r >= f0.len() {
                                return Err(bad(ln, "row out of range"));
                            }
                            match idx(2)? {
                                None => f0[r] += num(3)?,
                                Some(j) if j < n => rows[r].push((j, num(3)?)),
                                Some(_) => return Err(bad(ln, "variable out of range")),
                            }
                        }
                        Some(ConeBlock::Psd { dim, f0, coeffs }) => {
                            let (i, j) = (need(1)?, need(2)?);
                            if i > j || j >= *dim {
                                return Err(bad(ln, "psd entries need i <= j < dim"));
                            }
                            match idx(3)? {
                                None => f0.push((i, j, num(4)?)),
                                Some(v) if v < n => coeffs.entry(v).or_default().push((i, j, num(4)?)),
                                Some(_) => return Err(bad(ln, "variable out of range")),
                            }
                        }
                        None => return Err(bad(ln, "'f' before any block")),
                    }
                }
                "end" => ended = true,
                other => return Err(bad(ln, &format!("unknown directive '{other}'"))),
            }
        }
        if !ended {
            return Err(Error::InvalidInput("dump is missing 'end'".into()));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_lp() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0 -> (8/5, 6/5), value 14/5
        let mut m = Model::new();
        let x = m.add_var();
        let y = m.add_var();
        m.add_nonneg(&[
            x.clone(),
            y.clone(),
            LinExpr::constant(4.0).minus(&x).minus(&y.scale(2.0)),
            LinExpr::constant(6.0).minus(&x.scale(3.0)).minus(&y),
        ]);
        m.maximize(x.plus(&y));
        let sol = m.solve(&SolverOptions::default()).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.primal_value() - 2.8).abs() < 1e-8);
        assert!((sol.value(&x) - 1.6).abs() < 1e-7);
    }

    #[test]
    fn hermitian_spectral_bound() {
        // max <rho, W> s.t. -I <= W <= I equals the trace norm of rho
        let rho = Operator::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(0.7, 0.0),
            (1, 1) => c(-0.3, 0.0),
            (0, 1) => c(0.1, 0.2),
            _ => c(0.1, -0.2),
        });
        let mut m = Model::new();
        let w = m.hermitian_var(2);
        let id = MatExpr::from_operator(&Operator::identity(2));
        m.add_psd(&id.minus(&w)).unwrap();
        m.add_psd(&id.plus(&w)).unwrap();
        m.maximize(w.re_inner(&rho));
        let sol = m.solve(&SolverOptions::default()).unwrap();
        assert!(sol.is_optimal(), "{:?}", sol.raw.status);
        assert!((sol.primal_value() - rho.trace_norm()).abs() < 1e-8);
    }

    #[test]
    fn infeasible_lp_detected() {
        let mut m = Model::new();
        let x = m.add_var();
        m.add_nonneg(&[x.clone().minus(&LinExpr::constant(1.0)), LinExpr::constant(0.0).minus(&x)]);
        m.minimize(x.clone());
        let sol = m.solve(&SolverOptions::default()).unwrap();
        assert_eq!(sol.status(), SolveStatus::Infeasible);
        assert!(matches!(sol.raw.certificate, Some(Certificate::PrimalInfeasible { .. })));
    }

    #[test]
    fn unbounded_lp_detected() {
        let mut m = Model::new();
        let x = m.add_var();
        m.add_nonneg(&[x.clone()]);
        m.maximize(x);
        let sol = m.solve(&SolverOptions::default()).unwrap();
        assert_eq!(sol.status(), SolveStatus::Unbounded);
    }

    #[test]
    fn equality_constraints() {
        // min tr(CX) s.t. tr(X) = 1, X psd -> smallest eigenvalue of C
        let cm = Operator::from_real(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let mut m = Model::new();
        let x = m.hermitian_var(2);
        m.add_psd(&x).unwrap();
        m.add_eq(&x.trace(), 1.0);
        m.minimize(x.re_inner(&cm));
        let sol = m.solve(&SolverOptions::default()).unwrap();
        assert!(sol.is_optimal());
        let lmin = (5.0 - 5f64.sqrt()) / 2.0;
        assert!((sol.primal_value() - lmin).abs() < 1e-8);
    }

    #[test]
    fn dump_round_trip() {
        let mut m = Model::new();
        let w = m.hermitian_var(2);
        let id = MatExpr::from_operator(&Operator::identity(2));
        m.add_psd(&id.minus(&w)).unwrap();
        m.add_nonneg(&[w.trace().plus(&LinExpr::constant(1.0))]);
        m.maximize(w.entry(0, 1).0);
        let p = m.to_problem();
        let text = p.to_dump();
        let q = ConicProblem::from_dump(&text).unwrap();
        assert_eq!(q.to_dump(), text);
        assert!(ConicProblem::from_dump("conic 1\nvars 1\nobj 0 nan\nend\n").is_err());
        assert!(ConicProblem::from_dump("vars 1\nend\n").is_err());
    }
}
