//! Discrete Wigner representation for n qutrits and the F_W programs built on it.
//!
//! Phase-space points of one qutrit are `(a1, a2)` with flat index `3*a1 + a2`;
//! multi-qutrit points concatenate these with the first qutrit most significant.
//! `W_p(Y) = 3^-n <A_p, Y>`.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::conic::{LinExpr, MatExpr, Model, SolverOptions};
use crate::linalg::{c, Operator, C64};
use crate::states;
use crate::{log2, Error, Result};

pub const D: usize = 3;
/// Largest register with cached phase-point operators.
pub const MAX_QUTRITS: usize = 3;
/// Largest register for the F_W programs.
pub const MAX_SDP_QUTRITS: usize = 2;

pub fn root_of_unity(d: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64)
}

fn check_odd_prime(d: usize) -> Result<()> {
    let prime = d >= 3 && (2..d).take_while(|k| k * k <= d).all(|k| d % k != 0);
    if prime {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("phase space needs an odd prime dimension, got {d}")))
    }
}

/// T_{(a1,a2)} = w^{-(d+1)/2 a1 a2} Z^a1 X^a2; for d = 3 the phase is w^{-2 a1 a2}.
pub fn heisenberg_weyl_d(d: usize, a1: usize, a2: usize) -> Result<Operator> {
    check_odd_prime(d)?;
    if a1 >= d || a2 >= d {
        return Err(Error::InvalidInput(format!("phase-space index ({a1},{a2}) out of range for d = {d}")));
    }
    let half = (d + 1) / 2;
    let e = (d * d - (half * a1 * a2) % d) % d;
    let w = root_of_unity(d);
    let phase = w.powu(e as u32);
    // Z^a1 X^a2 |j> = w^{a1 (j + a2)} |j + a2>
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        let k = (j + a2) % d;
        m[(k, j)] = phase * w.powu(((a1 * k) % d) as u32);
    }
    Operator::try_new(m, vec![d])
}

pub fn heisenberg_weyl(a1: usize, a2: usize) -> Result<Operator> {
    heisenberg_weyl_d(D, a1, a2)
}

/// A_{(a1,a2)} = T A_0 T^dagger with A_0 = d^-1 sum_a T_a.
pub fn phase_point_op_d(d: usize, a1: usize, a2: usize) -> Result<Operator> {
    let mut a0 = DMatrix::<C64>::zeros(d, d);
    for b1 in 0..d {
        for b2 in 0..d {
            a0 += heisenberg_weyl_d(d, b1, b2)?.mat();
        }
    }
    a0 /= c(d as f64, 0.0);
    let t = heisenberg_weyl_d(d, a1, a2)?;
    let m = t.mat() * a0 * t.mat().adjoint();
    Operator::try_new((&m + m.adjoint()) * c(0.5, 0.0), vec![d])
}

/// One (a1, a2) pair per qutrit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PhasePoint(pub Vec<(usize, usize)>);

impl PhasePoint {
    pub fn new(coords: Vec<(usize, usize)>) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|&(a, b)| a >= D || b >= D) {
            return Err(Error::InvalidInput("phase point coordinates must lie in Z_3 x Z_3".into()));
        }
        Ok(PhasePoint(coords))
    }

    pub fn from_index(n: usize, mut idx: usize) -> Self {
        let mut v = vec![(0, 0); n];
        for k in (0..n).rev() {
            let p = idx % 9;
            v[k] = (p / 3, p % 3);
            idx /= 9;
        }
        PhasePoint(v)
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &(a, b)| acc * 9 + 3 * a + b)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn operator(&self) -> Operator {
        phase_point_ops(self.n()).map(|ops| ops[self.index()].clone()).unwrap_or_else(|_| {
            let mut op = phase_point_op(self.0[0]);
            for &p in &self.0[1..] {
                op = op.kron(&phase_point_op(p));
            }
            op
        })
    }
}

fn phase_point_op(p: (usize, usize)) -> Operator {
    phase_point_op_d(D, p.0, p.1).expect("valid qutrit phase point")
}

fn build_ops(n: usize) -> Vec<Operator> {
    let single: Vec<Operator> = (0..9).map(|k| phase_point_op((k / 3, k % 3))).collect();
    let mut ops = single.clone();
    for _ in 1..n {
        ops = ops.iter().flat_map(|a| single.iter().map(move |b| a.kron(b))).collect();
    }
    ops
}

/// Cached phase-point operators of n qutrits, indexed by [`PhasePoint::index`].
pub fn phase_point_ops(n: usize) -> Result<&'static [Operator]> {
    static CACHE: [OnceLock<Vec<Operator>>; MAX_QUTRITS] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    if n == 0 || n > MAX_QUTRITS {
        return Err(Error::TooLarge(format!("phase-point operators cached for 1..={MAX_QUTRITS} qutrits, got {n}")));
    }
    Ok(CACHE[n - 1].get_or_init(|| build_ops(n)))
}

/// Number of qutrits of a 3^n-dimensional square operator.
pub fn qutrit_count(y: &Operator) -> Result<usize> {
    let mut d = y.rows();
    let mut n = 0;
    while d > 1 && d % 3 == 0 {
        d /= 3;
        n += 1;
    }
    if !y.is_square() || d != 1 || n == 0 {
        return Err(Error::DimensionMismatch(format!("expected a 3^n x 3^n operator, got {}x{}", y.rows(), y.cols())));
    }
    Ok(n)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WignerRep {
    pub n: usize,
    pub values: Vec<f64>,
}

impl WignerRep {
    pub fn get(&self, p: &PhasePoint) -> f64 {
        self.values[p.index()]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Rows are the first qutrit's point, columns the remaining qutrits'.
    pub fn table(&self) -> Vec<Vec<f64>> {
        if self.n == 1 {
            return (0..3).map(|a| self.values[3 * a..3 * a + 3].to_vec()).collect();
        }
        self.values.chunks(self.values.len() / 9).map(|r| r.to_vec()).collect()
    }

    /// CSV layout: header of column points, one row per row point.
    pub fn to_csv(&self) -> String {
        let label = |k: usize, digits: usize| -> String {
            let p = PhasePoint::from_index(digits, k);
            p.0.iter().map(|(a, b)| format!("({a},{b})")).collect::<Vec<_>>().join("")
        };
        let mut out = String::new();
        if self.n == 1 {
            out.push_str("a1\\a2,0,1,2\n");
            for (a, row) in self.table().iter().enumerate() {
                out.push_str(&format!("{a},{}\n", row.iter().map(|v| fmt12(*v)).collect::<Vec<_>>().join(",")));
            }
            return out;
        }
        let tab = self.table();
        let cols = tab[0].len();
        out.push_str("row\\col");
        for k in 0..cols {
            out.push_str(&format!(",{}", label(k, self.n - 1)));
        }
        out.push('\n');
        for (r, row) in tab.iter().enumerate() {
            out.push_str(&label(r, 1));
            for v in row {
                out.push_str(&format!(",{}", fmt12(*v)));
            }
            out.push('\n');
        }
        out
    }
}

fn fmt12(v: f64) -> String {
    let v = if v.abs() < 5e-16 { 0.0 } else { v };
    format!("{}", format!("{v:.11e}").parse::<f64>().unwrap_or(v))
}

fn check_hermitian(y: &Operator) -> Result<()> {
    if y.is_hermitian() {
        Ok(())
    } else {
        Err(Error::NotHermitian(y.hermitian_deviation()))
    }
}

pub fn wigner_rep(y: &Operator) -> Result<WignerRep> {
    let n = qutrit_count(y)?;
    check_hermitian(y)?;
    let ops = phase_point_ops(n)?;
    let norm = 3f64.powi(n as i32);
    Ok(WignerRep { n, values: ops.iter().map(|a| a.re_inner(y) / norm).collect() })
}

/// Y = sum_p W_p A_p.
pub fn inverse_wigner(rep: &WignerRep) -> Result<Operator> {
    let ops = phase_point_ops(rep.n)?;
    if rep.values.len() != ops.len() {
        return Err(Error::DimensionMismatch(format!("{} Wigner values for {} qutrits", rep.values.len(), rep.n)));
    }
    let dim = ops[0].rows();
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (a, &w) in ops.iter().zip(&rep.values) {
        m += a.mat() * c(w, 0.0);
    }
    Operator::try_new((&m + m.adjoint()) * c(0.5, 0.0), vec![3; rep.n])
}

/// ||Y||_W = sum_p |W_p(Y)|.
pub fn wigner_trace_norm(y: &Operator) -> Result<f64> {
    Ok(wigner_rep(y)?.l1())
}

/// Mana, log ||rho||_W.
pub fn mana(rho: &Operator) -> Result<f64> {
    Ok(log2(wigner_trace_norm(rho)?))
}

/// ||X||_W dual = max_p 3^n |W_p(X)|.
pub fn wigner_spectral_norm(x: &Operator) -> Result<f64> {
    let rep = wigner_rep(x)?;
    Ok(3f64.powi(rep.n as i32) * rep.max_abs())
}

fn sdp_qutrits(x: &Operator) -> Result<usize> {
    let n = qutrit_count(x)?;
    if n > MAX_SDP_QUTRITS {
        return Err(Error::TooLarge(format!("{n}-qutrit F_W program exceeds {MAX_SDP_QUTRITS} qutrits")));
    }
    check_hermitian(x)?;
    Ok(n)
}

/// Rows 3^n W_p(expr) >= 0 (scaled to unit-size coefficients).
fn wigner_rows(m: &MatExpr, n: usize) -> Result<Vec<LinExpr>> {
    Ok(phase_point_ops(n)?.iter().map(|a| m.re_inner(a)).collect())
}

/// Value of an F_W program together with its optimiser.
#[derive(Clone, Debug)]
pub struct FwValue {
    pub value: f64,
    pub dual_value: f64,
    pub optimiser: Operator,
}

/// ||X||_{F_W} = min Tr P + Tr M over X = P - M with P, M PSD and Wigner-nonnegative.
pub fn fw_base_norm(x: &Operator, opts: &SolverOptions) -> Result<FwValue> {
    let n = sdp_qutrits(x)?;
    let dim = x.rows();
    let mut m = Model::new();
    let neg = m.hermitian_var(dim);
    let pos = MatExpr::from_operator(x).plus(&neg);
    m.add_psd(&pos)?;
    m.add_psd(&neg)?;
    let mut rows = wigner_rows(&pos, n)?;
    rows.extend(wigner_rows(&neg, n)?);
    m.add_nonneg(&rows);
    m.minimize(pos.trace().plus(&neg.trace()));
    let sol = m.solve(opts)?;
    Ok(FwValue { value: sol.certified_value()?, dual_value: sol.dual_value(), optimiser: sol.eval(&pos) })
}

/// ||rho||_{F_W} dual = max <rho, sigma> over sigma in F_W.
pub fn fw_dual_overlap(rho: &Operator, opts: &SolverOptions) -> Result<FwValue> {
    let n = sdp_qutrits(rho)?;
    let mut m = Model::new();
    let sigma = m.hermitian_var(rho.rows());
    m.add_psd(&sigma)?;
    m.add_nonneg(&wigner_rows(&sigma, n)?);
    m.add_eq(&sigma.trace(), 1.0);
    m.maximize(sigma.re_inner(rho));
    let sol = m.solve(opts)?;
    Ok(FwValue { value: sol.certified_value()?, dual_value: sol.dual_value(), optimiser: sol.eval(&sigma) })
}

/// 1 + R^g_{F_W}(rho) = min Tr S over S >= rho with S Wigner-nonnegative.
pub fn fw_gen_robustness(rho: &Operator, opts: &SolverOptions) -> Result<FwValue> {
    let n = sdp_qutrits(rho)?;
    let mut m = Model::new();
    let s = m.hermitian_var(rho.rows());
    m.add_psd(&s.minus(&MatExpr::from_operator(rho)))?;
    m.add_nonneg(&wigner_rows(&s, n)?);
    m.minimize(s.trace());
    let sol = m.solve(opts)?;
    Ok(FwValue { value: sol.certified_value()?, dual_value: sol.dual_value(), optimiser: sol.eval(&s) })
}

/// W_tau(rho) in log2 units, with the optimal witness.
pub fn tempered_mana(rho: &Operator, opts: &SolverOptions) -> Result<(f64, Operator)> {
    let n = sdp_qutrits(rho)?;
    let r = crate::dhtest::tempered(rho, crate::dhtest::NormBall::Wigner { n }, opts)?;
    Ok((log2(r.value), r.witness))
}

// ---------------------------------------------------------------------------
// two-copy Norrell tables

/// Wigner table of N (x) N, in units of 1/36 (rows (a1,a2), columns (b1,b2)).
pub const NORRELL2_TABLE: [[i32; 9]; 9] = {
    let top = [1, -2, 1, -1, -1, -1, -1, -1, -1];
    let mid = [-2, 4, -2, 2, 2, 2, 2, 2, 2];
    let low = [-1, 2, -1, 1, 1, 1, 1, 1, 1];
    [top, mid, top, low, low, low, low, low, low]
};

/// Wigner table of X+, in units of 1/36.
pub const X_PLUS_TABLE: [[i32; 9]; 9] = {
    let top = [1, 0, 1, 0, 0, 0, 0, 0, 0];
    let mid = [0, 8, 0, 3, 3, 3, 3, 3, 3];
    let low = [0, 3, 0, 1, 1, 1, 1, 1, 1];
    [top, mid, top, low, low, low, low, low, low]
};

/// Wigner table of X-, in units of 1/36.
pub const X_MINUS_TABLE: [[i32; 9]; 9] = {
    let top = [0, 2, 0, 1, 1, 1, 1, 1, 1];
    let mid = [2, 4, 2, 1, 1, 1, 1, 1, 1];
    let low = [1, 1, 1, 0, 0, 0, 0, 0, 0];
    [top, mid, top, low, low, low, low, low, low]
};

/// Wigner table of the H+ witness, in units of 1/3 (rows a1, columns a2).
pub const H_PLUS_WITNESS_TABLE: [[i32; 3]; 3] = [[1, 1, 1], [1, -1, -1], [1, -1, -1]];

pub fn table_rep(t: &[[i32; 9]; 9]) -> WignerRep {
    WignerRep { n: 2, values: t.iter().flatten().map(|&v| v as f64 / 36.0).collect() }
}

/// (X+, X-) with X+ - X- = N (x) N.
pub fn norrell_split() -> Result<(Operator, Operator)> {
    Ok((inverse_wigner(&table_rep(&X_PLUS_TABLE))?, inverse_wigner(&table_rep(&X_MINUS_TABLE))?))
}

/// ((1+2r3)/3) H+ - ((2r3-1)/3) H- - (1/3) Hi.
pub fn h_plus_witness() -> Operator {
    let r3 = 3f64.sqrt();
    let p = states::h_plus().operator.scale((1.0 + 2.0 * r3) / 3.0);
    let m = states::h_minus().operator.scale((2.0 * r3 - 1.0) / 3.0);
    let i = states::h_i().operator.scale(1.0 / 3.0);
    (&(&p - &m) - &i).hermitian_part().with_dims(vec![3]).expect("qutrit dims")
}

/// The vectors v1..v5 as displayed, normalised, with their displayed weights.
pub fn displayed_v_vectors() -> Vec<(f64, nalgebra::DVector<C64>)> {
    let raw: [(f64, [f64; 9]); 5] = [
        (5.0 / 12.0, [1., 0., 1., -1., -2., -1., 1., 0., 1.]),
        (5.0 / 12.0, [0., 1., 0., -1., 0., -1., 0., 1., 0.]),
        (1.0 / 3.0, [1., 1., 1., 1., 1., 1., 1., 1., 1.]),
        (1.0 / 2.0, [-1., 0., 1., -1., 0., 1., -1., 0., 1.]),
        (1.0 / 12.0, [0., -1., -2., 1., 0., -1., 2., 1., 0.]),
    ];
    raw.iter()
        .map(|(w, v)| (*w, crate::linalg::normalize(&nalgebra::DVector::from_iterator(9, v.iter().map(|&x| c(x, 0.0))))))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub expected: f64,
    pub detail: String,
}

impl Check {
    fn close(name: &str, value: f64, expected: f64, tol: f64, detail: &str) -> Check {
        Check { name: name.into(), passed: (value - expected).abs() <= tol, value, expected, detail: detail.into() }
    }

    fn at_most(name: &str, value: f64, bound: f64, detail: &str) -> Check {
        Check { name: name.into(), passed: value <= bound, value, expected: bound, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NorrellReport {
    pub checks: Vec<Check>,
    /// Informational findings that do not affect `all_passed`.
    pub notes: Vec<Check>,
    pub all_passed: bool,
}

/// Reproduces the two-copy Norrell tables, the X+/X- split and the H+ witness.
/// With `solve` set, also runs the F_W base-norm and W_tau programs.
pub fn verify_norrell_split(solve: bool, opts: &SolverOptions) -> Result<NorrellReport> {
    let n1 = states::norrell().operator;
    let n2 = n1.kron(&n1);
    let rep = wigner_rep(&n2)?;
    let expect = table_rep(&NORRELL2_TABLE);
    let dev = rep.values.iter().zip(&expect.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut checks = vec![Check::at_most("norrell2_table_max_dev", dev, 1e-12, "81 entries of W(N (x) N) vs table")];

    let (xp, xm) = norrell_split()?;
    checks.push(Check::at_most("split_difference", (&xp - &xm).max_abs_diff(&n2), 1e-12, "X+ - X- = N (x) N"));
    let min_w = table_rep(&X_PLUS_TABLE).values.iter().chain(&table_rep(&X_MINUS_TABLE).values).fold(f64::INFINITY, |a, &b| a.min(b));
    checks.push(Check { name: "split_wigner_nonnegative".into(), passed: min_w >= 0.0, value: min_w, expected: 0.0, detail: "tables of X+ and X-".into() });
    let ep = xp.min_eigenvalue()?;
    let em = xm.min_eigenvalue()?;
    checks.push(Check { name: "x_plus_psd".into(), passed: ep >= -1e-9, value: ep, expected: 0.0, detail: "min eigenvalue".into() });
    checks.push(Check { name: "x_minus_psd".into(), passed: em >= -1e-9, value: em, expected: 0.0, detail: "min eigenvalue".into() });
    let (tp, tm) = (xp.trace().re, xm.trace().re);
    checks.push(Check::close("trace_sum", tp + tm, 11.0 / 3.0, 1e-9, "Tr X+ + Tr X-"));
    checks.push(Check::close("trace_difference", tp - tm, 1.0, 1e-9, "Tr X+ - Tr X-"));

    // Spectral form of X-: every v_k is an eigenvector, and the eigenvalues
    // 5/12 (v1, v2), 1/3 (v3), 1/12 (v4, v5) rebuild X- from the spans.
    let vs = displayed_v_vectors();
    let corrected = [5.0 / 12.0, 5.0 / 12.0, 1.0 / 3.0, 1.0 / 12.0, 1.0 / 12.0];
    let mut eig_dev: f64 = 0.0;
    for ((_, v), &lam) in vs.iter().zip(&corrected) {
        let r = xm.mat() * v - v * c(lam, 0.0);
        eig_dev = eig_dev.max(r.norm());
    }
    checks.push(Check::at_most("x_minus_eigenvectors", eig_dev, 1e-12, "X- v_k = lambda_k v_k"));
    let span = |idx: &[usize]| -> DMatrix<C64> {
        let cols: Vec<_> = idx.iter().map(|&i| vs[i].1.clone()).collect();
        let b = DMatrix::from_columns(&cols);
        let g = b.adjoint() * &b;
        let ginv = g.try_inverse().expect("independent vectors");
        &b * ginv * b.adjoint()
    };
    let rebuilt = span(&[0, 1]) * c(5.0 / 12.0, 0.0) + span(&[2]) * c(1.0 / 3.0, 0.0) + span(&[3, 4]) * c(1.0 / 12.0, 0.0);
    let rb_dev = (rebuilt - xm.mat()).iter().fold(0.0, |m: f64, z| m.max(z.norm()));
    checks.push(Check::at_most("x_minus_spectral_rebuild", rb_dev, 1e-12, "X- = sum lambda Pi_span"));
    let rebuilt_plus = n2.mat() + xm.mat();
    let rp_dev = (rebuilt_plus - xp.mat()).iter().fold(0.0, |m: f64, z| m.max(z.norm()));
    checks.push(Check::at_most("x_plus_rebuild", rp_dev, 1e-12, "X+ = N (x) N + X-"));

    let mut displayed = DMatrix::<C64>::zeros(9, 9);
    for (w, v) in &vs {
        displayed += v * v.adjoint() * c(*w, 0.0);
    }
    let disp_dev = (displayed - xm.mat()).iter().fold(0.0, |m: f64, z| m.max(z.norm()));
    let notes = vec![Check::at_most(
        "displayed_rank_one_sum",
        disp_dev,
        1e-9,
        "literal weighted sum of |v_k><v_k| with the displayed weights (v4 weight 1/2, v4 and v5 not orthogonal)",
    )];

    let wit = h_plus_witness();
    let wrep = wigner_rep(&wit)?;
    let wdev = wrep.values.iter().zip(H_PLUS_WITNESS_TABLE.iter().flatten()).map(|(a, &b)| (a - b as f64 / 3.0).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("h_plus_witness_table", wdev, 1e-12, "Wigner table of the witness"));
    let target = (1.0 + 2.0 * 3f64.sqrt()) / 3.0;
    checks.push(Check::close("h_plus_witness_dual_norm", wigner_spectral_norm(&wit)?, 1.0, 1e-12, "||X||_W dual"));
    checks.push(Check::close("h_plus_witness_op_norm", wit.op_norm(), target, 1e-12, "||X||_inf"));
    let hp = states::h_plus().operator;
    checks.push(Check::close("h_plus_witness_overlap", wit.re_inner(&hp), target, 1e-12, "<H+|X|H+>"));

    if solve {
        let fw = fw_base_norm(&n2, opts)?;
        checks.push(Check::close("fw_base_norm_n2", fw.value, 11.0 / 3.0, 1e-6, "SDP"));
        let (wt, _) = tempered_mana(&hp, opts)?;
        checks.push(Check::close("tempered_mana_h_plus", wt, target.log2(), 1e-6, "SDP, log2"));
    }
    let all_passed = checks.iter().all(|k| k.passed);
    Ok(NorrellReport { checks, notes, all_passed })
}
