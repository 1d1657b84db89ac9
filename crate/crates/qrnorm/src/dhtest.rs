//! Hypothesis-testing quantities: D_H, the emancipated D_hbar, their
//! minimisation over a norm ball (through the dual form), and the epsilon-delta
//! inequality between smoothed norms and D_hbar.
//!
//! Entropies are returned as `f64` in log2 units; `f64::INFINITY` encodes an
//! infimum that is zero or negative.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::conic::{ConicProblem, LinExpr, MatExpr, Model, SolverOptions};
use crate::linalg::{c, Operator, C64};
use crate::{entanglement, log2, stab, wigner, Error, Result};

/// Below this an inner infimum is treated as zero (entropy +inf).
pub const ZERO_INF_TOL: f64 = 1e-8;
/// Eigenvalues below this (relative to the largest) are outside the support.
pub const SUPPORT_TOL: f64 = 1e-9;

/// The norms the crate knows about, with the metadata used by the rate bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormTag {
    SepBase,
    Negativity,
    ReshuffledNegativity,
    FwBase,
    Wigner,
    StabBase,
    StabiliserP,
    SepRobustness,
    FwRobustness,
    StabRobustness,
}

impl NormTag {
    pub const ALL: [NormTag; 10] = [
        NormTag::SepBase,
        NormTag::Negativity,
        NormTag::ReshuffledNegativity,
        NormTag::FwBase,
        NormTag::Wigner,
        NormTag::StabBase,
        NormTag::StabiliserP,
        NormTag::SepRobustness,
        NormTag::FwRobustness,
        NormTag::StabRobustness,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            NormTag::SepBase => "sep-base",
            NormTag::Negativity => "negativity",
            NormTag::ReshuffledNegativity => "reshuffled-negativity",
            NormTag::FwBase => "fw-base",
            NormTag::Wigner => "wigner",
            NormTag::StabBase => "stab-base",
            NormTag::StabiliserP => "stabiliser",
            NormTag::SepRobustness => "sep-robustness",
            NormTag::FwRobustness => "fw-robustness",
            NormTag::StabRobustness => "stab-robustness",
        }
    }

    pub fn parse(s: &str) -> Result<NormTag> {
        NormTag::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| Error::InvalidInput(format!("unknown norm '{s}'")))
    }

    /// Whether the dual norm is multiplicative under tensor products.
    pub fn dual_multiplicative(&self) -> bool {
        matches!(self, NormTag::Negativity | NormTag::ReshuffledNegativity | NormTag::Wigner | NormTag::StabiliserP)
    }

    /// Ball whose dual support function is SDP/LP representable, if any.
    pub fn ball(&self, x: &Operator) -> Result<NormBall> {
        match self {
            NormTag::Negativity => {
                let (da, db) = bipartite_dims(x)?;
                Ok(NormBall::Negativity { da, db })
            }
            NormTag::ReshuffledNegativity => {
                let (da, db) = bipartite_dims(x)?;
                Ok(NormBall::Reshuffled { da, db })
            }
            NormTag::Wigner => Ok(NormBall::Wigner { n: wigner::qutrit_count(x)? }),
            NormTag::StabiliserP => Ok(NormBall::Stabiliser { n: stab::qubit_count(x)? }),
            t => Err(Error::Unsupported(format!("no SDP-representable ball for norm '{}'", t.name()))),
        }
    }
}

/// Bipartite split from the operator's declared dims, or a square split.
pub fn bipartite_dims(x: &Operator) -> Result<(usize, usize)> {
    if x.dims().len() == 2 {
        return Ok((x.dims()[0], x.dims()[1]));
    }
    let d = (x.rows() as f64).sqrt().round() as usize;
    if x.is_square() && d * d == x.rows() && d >= 2 {
        Ok((d, d))
    } else {
        Err(Error::DimensionMismatch(format!("cannot split a {}-dimensional operator into two factors", x.rows())))
    }
}

/// Unit ball of a norm with SDP/LP-representable primal and dual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NormBall {
    /// ||X^Gamma||_1.
    Negativity { da: usize, db: usize },
    /// ||X^R||_1.
    Reshuffled { da: usize, db: usize },
    /// Wigner trace norm on n qutrits.
    Wigner { n: usize },
    /// Stabiliser norm ||.||_P on n qubits.
    Stabiliser { n: usize },
}

impl NormBall {
    pub fn dim(&self) -> usize {
        match *self {
            NormBall::Negativity { da, db } | NormBall::Reshuffled { da, db } => da * db,
            NormBall::Wigner { n } => 3usize.pow(n as u32),
            NormBall::Stabiliser { n } => 1 << n,
        }
    }

    pub fn tag(&self) -> NormTag {
        match self {
            NormBall::Negativity { .. } => NormTag::Negativity,
            NormBall::Reshuffled { .. } => NormTag::ReshuffledNegativity,
            NormBall::Wigner { .. } => NormTag::Wigner,
            NormBall::Stabiliser { .. } => NormTag::StabiliserP,
        }
    }

    fn check(&self, x: &Operator) -> Result<()> {
        if !x.is_square() || x.rows() != self.dim() {
            return Err(Error::DimensionMismatch(format!("{}x{} operator for a {}-dimensional ball", x.rows(), x.cols(), self.dim())));
        }
        Ok(())
    }

    fn with_split(&self, x: &Operator) -> Result<Operator> {
        match *self {
            NormBall::Negativity { da, db } | NormBall::Reshuffled { da, db } => x.clone().with_dims(vec![da, db]),
            _ => Ok(x.clone()),
        }
    }

    pub fn primal_norm(&self, x: &Operator) -> Result<f64> {
        self.check(x)?;
        let x = self.with_split(x)?;
        match self {
            NormBall::Negativity { .. } => entanglement::negativity(&x),
            NormBall::Reshuffled { .. } => entanglement::reshuffled_negativity(&x),
            NormBall::Wigner { .. } => wigner::wigner_trace_norm(&x),
            NormBall::Stabiliser { .. } => stab::stab_norm(&x),
        }
    }

    pub fn dual_norm(&self, x: &Operator) -> Result<f64> {
        self.check(x)?;
        let x = self.with_split(x)?;
        match self {
            NormBall::Negativity { .. } => Ok(x.partial_transpose_b()?.op_norm()),
            NormBall::Reshuffled { .. } => Ok(x.reshuffle()?.op_norm()),
            NormBall::Wigner { .. } => wigner::wigner_spectral_norm(&x),
            NormBall::Stabiliser { .. } => stab::stab_norm_dual(&x),
        }
    }

    /// Adds constraints encoding ||Q||_dual <= t.
    pub fn constrain_dual(&self, m: &mut Model, q: &MatExpr, t: &LinExpr) -> Result<()> {
        let d = self.dim();
        match *self {
            NormBall::Negativity { da, db } => {
                let qg = q.partial_transpose_b(da, db);
                let ti = MatExpr::scaled_identity(t, d);
                m.add_psd(&ti.minus(&qg))?;
                m.add_psd(&ti.plus(&qg))?;
            }
            NormBall::Reshuffled { da, db } => {
                let qr = q.reshuffle(da, db);
                let blk = MatExpr::block2(&MatExpr::scaled_identity(t, da * da), &qr, &qr.adjoint(), &MatExpr::scaled_identity(t, db * db));
                m.add_psd(&blk)?;
            }
            NormBall::Wigner { n } => {
                let mut rows = Vec::new();
                for a in wigner::phase_point_ops(n)? {
                    let e = q.re_inner(a);
                    rows.push(t.minus(&e));
                    rows.push(t.plus(&e));
                }
                m.add_nonneg(&rows);
            }
            NormBall::Stabiliser { n } => {
                let mut rows = Vec::new();
                for p in stab::all_paulis(n) {
                    let e = q.re_inner(&p.operator());
                    rows.push(t.minus(&e));
                    rows.push(t.plus(&e));
                }
                m.add_nonneg(&rows);
            }
        }
        Ok(())
    }

    /// Adds constraints encoding ||X|| <= t.
    pub fn constrain_primal(&self, m: &mut Model, x: &MatExpr, t: &LinExpr) -> Result<()> {
        match *self {
            NormBall::Negativity { da, db } => constrain_trace_norm(m, &x.partial_transpose_b(da, db), t),
            NormBall::Reshuffled { da, db } => {
                let xr = x.reshuffle(da, db);
                let u = m.hermitian_var(da * da);
                let v = m.hermitian_var(db * db);
                m.add_psd(&MatExpr::block2(&u, &xr, &xr.adjoint(), &v))?;
                m.add_le(&u.trace().plus(&v.trace()).scale(0.5), t);
                Ok(())
            }
            NormBall::Wigner { n } => {
                let scale = 3f64.powi(-(n as i32));
                let ops = wigner::phase_point_ops(n)?;
                abs_sum_le(m, ops.iter().map(|a| x.re_inner(a).scale(scale)).collect(), 1.0, t);
                Ok(())
            }
            NormBall::Stabiliser { n } => {
                let exprs = stab::all_paulis(n).iter().map(|p| x.re_inner(&p.operator())).collect();
                abs_sum_le(m, exprs, 1.0 / (1u64 << n) as f64, t);
                Ok(())
            }
        }
    }
}

/// scale * sum_k |e_k| <= t through epigraph variables.
fn abs_sum_le(m: &mut Model, exprs: Vec<LinExpr>, scale: f64, t: &LinExpr) {
    let mut rows = Vec::with_capacity(2 * exprs.len());
    let mut total = LinExpr::default();
    for e in exprs {
        let u = m.add_var();
        rows.push(u.minus(&e));
        rows.push(u.plus(&e));
        total = total.plus(&u.scale(scale));
    }
    m.add_nonneg(&rows);
    m.add_le(&total, t);
}

/// ||Y||_1 <= t for a Hermitian expression, via Y = P - N with P, N PSD.
pub fn constrain_trace_norm(m: &mut Model, y: &MatExpr, t: &LinExpr) -> Result<()> {
    let n = m.hermitian_var(y.rows);
    m.add_psd(&y.plus(&n))?;
    m.add_psd(&n)?;
    m.add_le(&y.trace().plus(&n.trace().scale(2.0)), t);
    Ok(())
}

/// `op * e` for a constant operator and scalar affine expression.
fn op_times(op: &Operator, e: &LinExpr) -> MatExpr {
    let base = MatExpr::from_operator(op);
    let mut out = base.scale(e.constant);
    for (&j, &v) in &e.terms {
        out.terms.insert(j, base.constant.iter().map(|(&k, &z)| (k, z * v)).collect());
    }
    out
}

/// Support projector and an orthonormal kernel basis.
pub fn support_face(rho: &Operator) -> Result<(Operator, DMatrix<C64>)> {
    let e = rho.eigh()?;
    let top = e.values.iter().fold(0.0, |a: f64, v| a.max(v.abs())).max(1e-300);
    let n = e.values.len();
    let mut pi = DMatrix::<C64>::zeros(n, n);
    let mut ker = Vec::new();
    for (k, &v) in e.values.iter().enumerate() {
        let col = e.vectors.column(k).into_owned();
        if v > SUPPORT_TOL * top {
            pi += &col * col.adjoint();
        } else {
            ker.push(col);
        }
    }
    let b = if ker.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&ker) };
    let pi = Operator::new((&pi + pi.adjoint()) * c(0.5, 0.0));
    Ok((pi, b))
}

fn check_state(rho: &Operator) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::DimensionMismatch("state must be square".into()));
    }
    if !rho.is_hermitian() {
        return Err(Error::NotHermitian(rho.hermitian_deviation()));
    }
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-8 || rho.min_eigenvalue()? < -1e-8 {
        return Err(Error::InvalidInput(format!("not a density operator (trace {tr:.6})")));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidInput(format!("epsilon must lie in [0, 1), got {eps}")));
    }
    Ok(())
}

/// Hermitian test-operator variable. For `eps = 0` the constraint <Q, rho> = 1
/// pins Q to the identity on the support, so Q = Pi + B K B^dagger with
/// `lower <= K <= 1`; otherwise `lower <= Q <= 1` and <Q, rho> >= 1 - eps.
fn test_operator(m: &mut Model, rho: &Operator, eps: f64, lower: f64) -> Result<MatExpr> {
    let d = rho.rows();
    if eps == 0.0 {
        let (pi, b) = support_face(rho)?;
        let k = b.ncols();
        let mut q = MatExpr::from_operator(&pi);
        if k > 0 {
            let kv = m.hermitian_var(k);
            m.add_psd(&MatExpr::scaled_identity(&LinExpr::constant(1.0), k).minus(&kv))?;
            m.add_psd(&kv.minus(&MatExpr::scaled_identity(&LinExpr::constant(lower), k)))?;
            q = q.plus(&kv.congruence(&b));
        }
        return Ok(q);
    }
    let q = m.hermitian_var(d);
    m.add_psd(&MatExpr::scaled_identity(&LinExpr::constant(1.0), d).minus(&q))?;
    m.add_psd(&q.minus(&MatExpr::scaled_identity(&LinExpr::constant(lower), d)))?;
    m.add_le(&LinExpr::constant(1.0 - eps), &q.re_inner(rho));
    Ok(q)
}

/// An inner infimum and the entropy -log2 of it.
#[derive(Clone, Debug, Serialize)]
pub struct TestValue {
    pub inner: f64,
    pub entropy: f64,
    #[serde(skip)]
    pub test: Operator,
}

fn entropy_of(inner: f64, scale: f64) -> f64 {
    if inner <= ZERO_INF_TOL * scale.max(1.0) {
        f64::INFINITY
    } else {
        -inner.log2()
    }
}

fn solve_test(rho: &Operator, x: &Operator, eps: f64, lower: f64, opts: &SolverOptions) -> Result<TestValue> {
    check_state(rho)?;
    check_eps(eps)?;
    if !x.is_hermitian() {
        return Err(Error::NotHermitian(x.hermitian_deviation()));
    }
    if x.rows() != rho.rows() || !x.is_square() {
        return Err(Error::DimensionMismatch("rho and X differ in dimension".into()));
    }
    let mut m = Model::new();
    let q = test_operator(&mut m, rho, eps, lower)?;
    let (inner, test) = if m.num_vars() == 0 {
        let t = q.eval(&[]);
        (t.re_inner(x), t)
    } else {
        m.minimize(q.re_inner(x));
        let sol = m.solve(opts)?;
        (sol.certified_value()?, sol.eval(&q))
    };
    Ok(TestValue { inner, entropy: entropy_of(inner, x.trace_norm()), test })
}

/// D_H^eps(rho || X) = -log inf{<Q,X> : 0 <= Q <= 1, <Q,rho> >= 1 - eps}.
pub fn d_hyp(rho: &Operator, x: &Operator, eps: f64, opts: &SolverOptions) -> Result<TestValue> {
    solve_test(rho, x, eps, 0.0, opts)
}

/// D_hbar^eps(rho || X) = -log inf{<Q,X> : -1 <= Q <= 1, <Q,rho> >= 1 - eps}.
pub fn d_emancipated(rho: &Operator, x: &Operator, eps: f64, opts: &SolverOptions) -> Result<TestValue> {
    solve_test(rho, x, eps, -1.0, opts)
}

/// Optimal dual-norm value of a ball program and its optimiser.
#[derive(Clone, Debug, Serialize)]
pub struct BallValue {
    /// min ||Q||_dual over admissible tests (equivalently 1 / max).
    pub min_dual_norm: f64,
    /// -log2 of `min_dual_norm`.
    pub entropy: f64,
    #[serde(skip)]
    pub test: Operator,
    pub iterations: usize,
}

fn ball_program(rho: &Operator, ball: NormBall, eps: f64, opts: &SolverOptions) -> Result<BallValue> {
    check_state(rho)?;
    check_eps(eps)?;
    ball.check(rho)?;
    let mut m = Model::new();
    let q = test_operator(&mut m, rho, eps, -1.0)?;
    let t = m.add_var();
    ball.constrain_dual(&mut m, &q, &t)?;
    m.minimize(t);
    let sol = m.solve(opts)?;
    let v = sol.certified_value()?;
    Ok(BallValue { min_dual_norm: v, entropy: -log2(v), test: sol.eval(&q), iterations: sol.raw.iterations })
}

/// inf over ||Z|| <= 1 of D_hbar^eps(rho || Z), through max{1/||Q||_dual : ||Q||_inf <= 1, <Q,rho> >= 1 - eps}.
pub fn d_emancipated_min_over_ball(rho: &Operator, ball: NormBall, eps: f64, opts: &SolverOptions) -> Result<BallValue> {
    ball_program(rho, ball, eps, opts)
}

/// eps = 0 value through max{1/||Q||_dual : 2 Pi_rho - 1 <= Q <= 1}; depends on rho only through its support.
pub fn d_emancipated_zero_support_form(rho: &Operator, ball: NormBall, opts: &SolverOptions) -> Result<BallValue> {
    ball_program(rho, ball, 0.0, opts)
}

/// Primal side: sup s(1-eps) - Tr A - Tr B over s >= 0, A, B PSD with ||s rho + A - B|| <= 1.
pub fn ball_program_primal(rho: &Operator, ball: NormBall, eps: f64, opts: &SolverOptions) -> Result<f64> {
    check_state(rho)?;
    check_eps(eps)?;
    ball.check(rho)?;
    let d = rho.rows();
    let mut m = Model::new();
    let s = m.add_var();
    m.add_nonneg(&[s.clone()]);
    let a = m.hermitian_var(d);
    let b = m.hermitian_var(d);
    m.add_psd(&a)?;
    m.add_psd(&b)?;
    let z = op_times(rho, &s).plus(&a).minus(&b);
    ball.constrain_primal(&mut m, &z, &LinExpr::constant(1.0))?;
    m.maximize(s.scale(1.0 - eps).minus(&a.trace()).minus(&b.trace()));
    m.solve(opts)?.certified_value()
}

/// Which encoding of ||W||_inf = <W, rho> a tempered program uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TemperedForm {
    /// -<W,rho> 1 <= W <= <W,rho> 1 on a full Hermitian W.
    Paired,
    /// W = t Pi_rho + B K B^dagger with -t <= K <= t, which is the face the pair forces.
    Face,
}

#[derive(Clone, Debug, Serialize)]
pub struct Tempered {
    /// max <W, rho> (linear, not logged).
    pub value: f64,
    pub form: TemperedForm,
    #[serde(skip)]
    pub witness: Operator,
    pub iterations: usize,
}

/// max{<W,rho> : ||W||_dual <= 1, ||W||_inf = <W,rho>}, solved on the face.
/// The paired program has no strictly feasible point, so it is only a fallback.
pub fn tempered(rho: &Operator, ball: NormBall, opts: &SolverOptions) -> Result<Tempered> {
    tempered_with(rho, ball, TemperedForm::Face, opts).or_else(|e| match e {
        Error::Solver(_) => tempered_with(rho, ball, TemperedForm::Paired, opts),
        e => Err(e),
    })
}

fn tempered_model(rho: &Operator, ball: NormBall, form: TemperedForm) -> Result<(Model, MatExpr)> {
    check_state(rho)?;
    ball.check(rho)?;
    let d = rho.rows();
    let mut m = Model::new();
    let (w, obj) = match form {
        TemperedForm::Paired => {
            let w = m.hermitian_var(d);
            let v = w.re_inner(rho);
            let vi = MatExpr::scaled_identity(&v, d);
            m.add_psd(&vi.minus(&w))?;
            m.add_psd(&vi.plus(&w))?;
            (w, v)
        }
        TemperedForm::Face => {
            let (pi, b) = support_face(rho)?;
            let t = m.add_var();
            let mut w = op_times(&pi, &t);
            let k = b.ncols();
            if k > 0 {
                let kv = m.hermitian_var(k);
                let ti = MatExpr::scaled_identity(&t, k);
                m.add_psd(&ti.minus(&kv))?;
                m.add_psd(&ti.plus(&kv))?;
                w = w.plus(&kv.congruence(&b));
            }
            (w, t)
        }
    };
    ball.constrain_dual(&mut m, &w, &LinExpr::constant(1.0))?;
    m.maximize(obj);
    Ok((m, w))
}

pub fn tempered_with(rho: &Operator, ball: NormBall, form: TemperedForm, opts: &SolverOptions) -> Result<Tempered> {
    let (m, w) = tempered_model(rho, ball, form)?;
    let sol = m.solve(opts)?;
    Ok(Tempered { value: sol.certified_value()?, form, witness: sol.eval(&w).hermitian_part(), iterations: sol.raw.iterations })
}

/// The paired tempered program in raw conic form, e.g. for [`ConicProblem::to_dump`].
pub fn tempered_problem(rho: &Operator, ball: NormBall) -> Result<ConicProblem> {
    Ok(tempered_model(rho, ball, TemperedForm::Paired)?.0.to_problem())
}

/// log2 min ||X|| over Hermitian X with ||X||_1 <= 1 and ||X - rho||_1 <= eps.
pub fn smoothed_log_norm(rho: &Operator, ball: NormBall, eps: f64, opts: &SolverOptions) -> Result<f64> {
    check_state(rho)?;
    check_eps(eps)?;
    ball.check(rho)?;
    if eps == 0.0 {
        return Ok(log2(ball.primal_norm(rho)?));
    }
    let mut m = Model::new();
    let x = m.hermitian_var(rho.rows());
    let t = m.add_var();
    ball.constrain_primal(&mut m, &x, &t)?;
    constrain_trace_norm(&mut m, &x, &LinExpr::constant(1.0))?;
    constrain_trace_norm(&mut m, &x.minus(&MatExpr::from_operator(rho)), &LinExpr::constant(eps))?;
    m.minimize(t);
    Ok(log2(m.solve(opts)?.certified_value()?))
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsDelta {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks inf_{X in B_eps(rho)} log||X|| >= inf_{||Z|| <= 1} D_hbar^delta(rho||Z) + log(1 - delta - eps).
pub fn check_eps_delta(rho: &Operator, ball: NormBall, eps: f64, delta: f64, opts: &SolverOptions) -> Result<EpsDelta> {
    check_eps(eps)?;
    check_eps(delta)?;
    if eps + delta >= 1.0 {
        return Err(Error::InvalidInput(format!("need eps + delta < 1, got {}", eps + delta)));
    }
    let lhs = smoothed_log_norm(rho, ball, eps, opts)?;
    let rhs = d_emancipated_min_over_ball(rho, ball, delta, opts)?.entropy + log2(1.0 - delta - eps);
    Ok(EpsDelta { lhs, rhs, holds: lhs >= rhs - 1e-7 })
}
