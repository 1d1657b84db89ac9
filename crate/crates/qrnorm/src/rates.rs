//! Rate bounds assembled from monotone values, the one-shot maps behind them,
//! and irreversibility verdicts.
//!
//! A cost bound is `D_tau(rho) / L_mu(phi)`: copies of `phi` needed per copy
//! of `rho`, so `L_mu(phi) / D_tau(rho)` bounds the rate `r(phi -> rho)`. A
//! distillation bound is `log ||rho||_mu / (-L°_mu(phi))` bounding
//! `r(rho -> phi)`. The first two ingredients of every report are the
//! numerator and denominator, in that order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conic::{MatExpr, Model, SolverOptions};
use crate::dhtest::{self, bipartite_dims, NormBall, NormTag};
use crate::linalg::{pure_state_vector, random_hermitian, Operator};
use crate::{entanglement, log2, stab, states, wigner, Error, Result};

/// A product below `1 - VERDICT_MARGIN` counts as irreversibility.
pub const VERDICT_MARGIN: f64 = 1e-3;
/// Allowed excess of a contraction ratio over 1.
pub const CONTRACTION_TOL: f64 = 1e-9;
const ASSUMPTION_TOL: f64 = 1e-8;
const FEASIBILITY_TOL: f64 = 1e-9;
/// Denominators at or below this give the trivial bound +inf.
const TRIVIAL_DEN: f64 = 1e-12;

/// The unproven hypothesis behind the qubit-magic verdict.
pub const HOGGAR_CONJECTURE: &str = "R^s_STAB(Hog^n) = R^g_STAB(Hog^n) for all n";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    CostLower,
    DistillableUpper,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ingredient {
    pub name: String,
    pub value: f64,
    pub provenance: String,
}

impl Ingredient {
    fn new(name: &str, value: f64, provenance: impl Into<String>) -> Self {
        Ingredient { name: name.into(), value, provenance: provenance.into() }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den <= TRIVIAL_DEN {
        f64::INFINITY
    } else {
        num / den
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RateBoundReport {
    /// Cost lower bound (copies of phi per rho), or the distillable rate upper bound.
    pub bound: f64,
    /// Upper bound on r(phi -> rho) for cost reports, on r(rho -> phi) for distillation.
    pub rate_bound: f64,
    pub direction: Direction,
    pub formula: String,
    pub ingredients: Vec<Ingredient>,
    pub norm: NormTag,
    pub ball: Option<NormBall>,
    /// Copies used for L_mu(phi); 0 means the exact n -> inf limit.
    pub copies: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditional_on: Option<String>,
}

impl RateBoundReport {
    /// Recomputes `bound` from the quoted numerator and denominator.
    pub fn reevaluate(&self) -> f64 {
        ratio(self.ingredients[0].value, self.ingredients[1].value)
    }

    /// Recomputes `rate_bound`.
    pub fn reevaluate_rate(&self) -> f64 {
        match self.direction {
            Direction::CostLower => ratio(self.ingredients[1].value, self.ingredients[0].value),
            Direction::DistillableUpper => self.reevaluate(),
        }
    }

    pub fn rate_formula(&self) -> String {
        match self.direction {
            Direction::CostLower => format!("{} / {}", self.ingredients[1].name, self.ingredients[0].name),
            Direction::DistillableUpper => self.formula.clone(),
        }
    }
}

/// How L_mu(phi) = lim (1/n) log ||phi^n||_mu is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularisation {
    /// (1/n) log ||phi^n||_mu, an upper estimate by submultiplicativity.
    Copies(usize),
    /// The exact limit, for multiplicative norms and the pure-state SEP formula.
    Limit,
    /// log(1 + R^s_STAB(phi)), valid only under [`HOGGAR_CONJECTURE`].
    HoggarConjecture,
}

#[derive(Clone, Debug, Serialize)]
pub struct LogNormEstimate {
    pub value: f64,
    pub copies: usize,
    pub provenance: String,
    pub conditional_on: Option<String>,
}

fn closed_form(tag: NormTag) -> bool {
    matches!(tag, NormTag::Negativity | NormTag::ReshuffledNegativity | NormTag::Wigner | NormTag::StabiliserP)
}

fn ball_power(ball: NormBall, n: usize) -> NormBall {
    let p = n as u32;
    match ball {
        NormBall::Negativity { da, db } => NormBall::Negativity { da: da.pow(p), db: db.pow(p) },
        NormBall::Reshuffled { da, db } => NormBall::Reshuffled { da: da.pow(p), db: db.pow(p) },
        NormBall::Wigner { n: k } => NormBall::Wigner { n: n * k },
        NormBall::Stabiliser { n: k } => NormBall::Stabiliser { n: n * k },
    }
}

/// Whether the ball on n copies is within the cached operator sets.
fn ball_power_supported(ball: NormBall, n: usize) -> bool {
    match ball_power(ball, n) {
        NormBall::Wigner { n } => n <= wigner::MAX_QUTRITS,
        NormBall::Stabiliser { n } => n <= stab::MAX_PAULI_QUBITS,
        b => b.dim() <= 256,
    }
}

/// x^n, regrouped as A^n | B^n for bipartite balls.
fn power_in(x: &Operator, ball: NormBall, n: usize) -> Result<Operator> {
    match ball {
        NormBall::Negativity { da, db } | NormBall::Reshuffled { da, db } => {
            let p = x.clone().with_dims(vec![da, db])?.tensor_power(n);
            let mask: Vec<bool> = (0..2 * n).map(|s| s % 2 == 0).collect();
            p.regroup(&mask)
        }
        _ => Ok(x.tensor_power(n)),
    }
}

fn pure_sep(phi: &Operator) -> Result<entanglement::PureSepNorms> {
    let (da, db) = bipartite_dims(phi)?;
    let v = pure_state_vector(phi, 1e-9).ok_or_else(|| Error::Unsupported("SEP norms of mixed states are only available as relaxations".into()))?;
    entanglement::pure_sep_norms(&v, da, db)
}

pub fn log_norm_estimate(phi: &Operator, mu: NormTag, reg: Regularisation, opts: &SolverOptions) -> Result<LogNormEstimate> {
    let est = |value: f64, copies: usize, provenance: String| LogNormEstimate { value, copies, provenance, conditional_on: None };
    match reg {
        Regularisation::HoggarConjecture => {
            if mu != NormTag::StabBase {
                return Err(Error::InvalidInput("the robustness conjecture applies to the stabiliser base norm".into()));
            }
            let v = stab::stab_one_plus_rs(phi, opts)?;
            Ok(LogNormEstimate {
                value: log2(v),
                copies: 1,
                provenance: "log(1 + R^s_STAB(phi)) from the stabiliser LP; equals L_STAB(phi) if R^s = R^g on all copies".into(),
                conditional_on: Some(HOGGAR_CONJECTURE.into()),
            })
        }
        Regularisation::Limit => match mu {
            NormTag::SepBase => {
                let s = pure_sep(phi)?;
                Ok(est(log2(s.one_plus_rs), 0, "(1/n) log(2 (1+R^s)^n - 1) tends to log(1+R^s) for pure states".into()))
            }
            t if closed_form(t) => {
                let v = t.ball(phi)?.primal_norm(phi)?;
                Ok(est(log2(v), 0, format!("{} norm is multiplicative", t.name())))
            }
            t => Err(Error::Unsupported(format!("no closed-form limit for L under '{}'", t.name()))),
        },
        Regularisation::Copies(n) => {
            if n == 0 {
                return Err(Error::InvalidInput("copies must be >= 1".into()));
            }
            let (v, how) = match mu {
                t if closed_form(t) => {
                    let ball = t.ball(phi)?;
                    (ball_power(ball, n).primal_norm(&power_in(phi, ball, n)?)?, "closed form")
                }
                NormTag::SepBase => {
                    let s = pure_sep(phi)?;
                    (2.0 * s.one_plus_rs.powi(n as i32) - 1.0, "pure-state Schmidt formula")
                }
                NormTag::FwBase => (wigner::fw_base_norm(&phi.tensor_power(n), opts)?.value, "F_W base-norm SDP"),
                NormTag::StabBase => (stab::stab_base_norm(&phi.tensor_power(n), opts)?.value, "stabiliser base-norm LP"),
                t => return Err(Error::Unsupported(format!("L is estimated from base norms, not '{}'", t.name()))),
            };
            Ok(est(log2(v) / n as f64, n, format!("(1/{n}) log ||phi^{n}||, {how}")))
        }
    }
}

fn dual_mult_deviation(ball: NormBall, y: &Operator) -> Result<Option<f64>> {
    if !ball_power_supported(ball, 2) {
        return Ok(None);
    }
    let one = ball.dual_norm(y)?;
    let two = ball_power(ball, 2).dual_norm(&power_in(y, ball, 2)?)?;
    Ok(Some((two - one * one).abs() / one.max(1.0).powi(2)))
}

/// E_c-type bound `D_tau(rho) / L_mu(phi)` with a ball whose dual norm is multiplicative.
pub fn cost_lower_bound(rho: &Operator, phi: &Operator, ball: NormBall, mu: NormTag, reg: Regularisation, opts: &SolverOptions) -> Result<RateBoundReport> {
    if !ball.tag().dual_multiplicative() {
        return Err(Error::Unsupported(format!("'{}' ball has no multiplicative dual", ball.tag().name())));
    }
    let t = dhtest::tempered(rho, ball, opts)?;
    let dev = dual_mult_deviation(ball, &t.witness)?;
    if let Some(d) = dev {
        if d > 1e-6 {
            return Err(Error::InvalidInput(format!("dual norm not multiplicative on the witness (deviation {d:.3e})")));
        }
    }
    let l = log_norm_estimate(phi, mu, reg, opts)?;
    let d = log2(t.value);
    let mut ingredients = vec![
        Ingredient::new("D_tau(rho)", d, format!("log2 of the tempered program over the {} ball ({} iterations)", ball.tag().name(), t.iterations)),
        Ingredient::new("L_mu(phi)", l.value, l.provenance),
    ];
    if let Some(dev) = dev {
        ingredients.push(Ingredient::new("dual_multiplicativity_deviation", dev, "||W (x) W||° vs (||W||°)^2 on the optimal witness"));
    }
    Ok(RateBoundReport {
        bound: ratio(d, l.value),
        rate_bound: ratio(l.value, d),
        direction: Direction::CostLower,
        formula: "D_tau(rho) / L_mu(phi)".into(),
        ingredients,
        norm: mu,
        ball: Some(ball),
        copies: l.copies,
        conditional_on: l.conditional_on,
    })
}

fn omega_dimension(rho: &Operator) -> Option<usize> {
    let (da, db) = bipartite_dims(rho).ok()?;
    if da != db || da < 3 {
        return None;
    }
    let om = states::omega(da).ok()?;
    (om.max_abs_diff(rho) < 1e-10).then_some(da)
}

/// ||x||_mu with its provenance.
pub fn norm_value(x: &Operator, tag: NormTag, opts: &SolverOptions) -> Result<(f64, String)> {
    match tag {
        t if closed_form(t) => Ok((t.ball(x)?.primal_norm(x)?, "closed form".into())),
        NormTag::SepBase => {
            let v = entanglement::sep_base_norm(x)?;
            if !v.exact {
                return Err(Error::Unsupported("SEP base norm of a mixed state is only bounded from below".into()));
            }
            Ok((v.value, v.method.into()))
        }
        NormTag::FwBase => Ok((wigner::fw_base_norm(x, opts)?.value, "F_W base-norm SDP".into())),
        NormTag::StabBase => Ok((stab::stab_base_norm(x, opts)?.value, "stabiliser base-norm LP".into())),
        t => Err(Error::Unsupported(format!("'{}' is evaluated as the positive variant of its base norm", t.name()))),
    }
}

/// p_mu(rho) = inf{||Z||_mu : rho <= Z}, or an upper bound on it.
pub fn positive_norm(rho: &Operator, tag: NormTag, opts: &SolverOptions) -> Result<(f64, String)> {
    match tag {
        t if closed_form(t) => {
            let ball = t.ball(rho)?;
            let mut m = Model::new();
            let z = m.hermitian_var(rho.rows());
            let s = m.add_var();
            m.add_psd(&z.minus(&MatExpr::from_operator(rho)))?;
            ball.constrain_primal(&mut m, &z, &s)?;
            m.minimize(s);
            Ok((m.solve(opts)?.certified_value()?, format!("SDP min ||Z||_{} over Z >= rho", t.name())))
        }
        NormTag::SepBase => {
            if let Ok(s) = pure_sep(rho) {
                return Ok((s.one_plus_rs, "pure states: 1 + R^g_SEP = (sum of Schmidt coefficients)^2".into()));
            }
            if let Some(d) = omega_dimension(rho) {
                let w = entanglement::verify_omega_witness(d)?;
                if !w.all_passed {
                    return Err(Error::InvalidInput("omega decomposition check failed".into()));
                }
                return Ok((1.0 + w.rg_upper, format!("upper bound from omega_{d} + Phi_{d}/(d-1) = P_{d}/(d-1) with P_{d}/{d} separable")));
            }
            Err(Error::Unsupported("R^g_SEP is only available for pure states and omega_d".into()))
        }
        NormTag::FwBase => Ok((wigner::fw_gen_robustness(rho, opts)?.value, "1 + R^g_{F_W} by SDP".into())),
        NormTag::StabBase => Ok((stab::stab_gen_robustness(rho, opts)?.value, "1 + R^g_STAB by LP + PSD".into())),
        t => positive_norm(rho, base_of(t).0, opts),
    }
}

/// ||phi||°_mu with its provenance; the single-letter -L° is -log of this.
pub fn dual_value(phi: &Operator, tag: NormTag, opts: &SolverOptions) -> Result<(f64, String)> {
    match tag {
        t if closed_form(t) => Ok((t.ball(phi)?.dual_norm(phi)?, "closed form, multiplicative".into())),
        NormTag::SepBase => Ok((pure_sep(phi)?.dual_overlap, "largest squared Schmidt coefficient, multiplicative".into())),
        NormTag::FwBase => Ok((wigner::fw_dual_overlap(phi, opts)?.value, "max overlap with F_W by SDP".into())),
        NormTag::StabBase => Ok((stab::stab_dual_overlap(phi)?, "max overlap with stabiliser states".into())),
        t => dual_value(phi, base_of(t).0, opts),
    }
}

fn base_of(tag: NormTag) -> (NormTag, bool) {
    match tag {
        NormTag::SepRobustness => (NormTag::SepBase, true),
        NormTag::FwRobustness => (NormTag::FwBase, true),
        NormTag::StabRobustness => (NormTag::StabBase, true),
        t => (t, false),
    }
}

/// `log ||rho||_mu / (-log ||phi||°_mu)`, or with p_mu(rho) in the numerator.
/// A vanishing denominator gives +inf.
pub fn distillable_upper_bound(rho: &Operator, phi: &Operator, norm: NormTag, positive_variant: bool, opts: &SolverOptions) -> Result<RateBoundReport> {
    let (base, forced) = base_of(norm);
    let positive = positive_variant || forced;
    let (nv, nprov) = if positive { positive_norm(rho, base, opts)? } else { norm_value(rho, base, opts)? };
    let (dv, dprov) = dual_value(phi, base, opts)?;
    let (num, den) = (log2(nv), -log2(dv));
    let num_name = if positive { "log p_mu(rho)" } else { "log ||rho||_mu" };
    let dprov = if den <= TRIVIAL_DEN { format!("{dprov}; -L° vanishes, so the bound is trivial") } else { dprov };
    let bound = ratio(num, den);
    Ok(RateBoundReport {
        bound,
        rate_bound: bound,
        direction: Direction::DistillableUpper,
        formula: format!("{num_name} / -L°_mu(phi)"),
        ingredients: vec![Ingredient::new(num_name, num, nprov), Ingredient::new("-L°_mu(phi)", den, dprov)],
        norm: base,
        ball: None,
        copies: 1,
        conditional_on: None,
    })
}

/// ||phi^m|| = 1/||phi^m||° = ||phi||^m for m = 1, 2; returns log2 ||phi||.
fn check_strict_assumption(phi: &Operator, norm: NormTag) -> Result<f64> {
    if !closed_form(norm) {
        return Err(Error::Unsupported(format!("exact one-shot formulas need a closed-form norm, got '{}'", norm.name())));
    }
    let ball = norm.ball(phi)?;
    let n1 = ball.primal_norm(phi)?;
    for m in 1..=2 {
        if !ball_power_supported(ball, m) {
            continue;
        }
        let b = ball_power(ball, m);
        let p = power_in(phi, ball, m)?;
        let (nm, dm) = (b.primal_norm(&p)?, b.dual_norm(&p)?);
        let want = n1.powi(m as i32);
        if (nm * dm - 1.0).abs() > ASSUMPTION_TOL || (nm - want).abs() > ASSUMPTION_TOL * want {
            return Err(Error::InvalidInput(format!("norm/dual assumption fails at {m} copies: ||phi^m|| = {nm}, 1/dual = {}, ||phi||^m = {want}", 1.0 / dm)));
        }
    }
    let l = log2(n1);
    if l <= TRIVIAL_DEN {
        return Err(Error::InvalidInput("phi has unit norm, so it is not a resource".into()));
    }
    Ok(l)
}

/// ceil(log ||rho||_mu / log ||phi||_mu).
pub fn one_shot_exact_cost(rho: &Operator, phi: &Operator, norm: NormTag) -> Result<u64> {
    let l = check_strict_assumption(phi, norm)?;
    let v = log2(norm.ball(rho)?.primal_norm(rho)?);
    Ok((v / l - 1e-9).ceil().max(0.0) as u64)
}

/// floor(inf_{||Z|| <= 1} D_hbar^0(rho||Z) / log ||phi||_mu).
pub fn one_shot_exact_distillation(rho: &Operator, phi: &Operator, norm: NormTag, opts: &SolverOptions) -> Result<u64> {
    let l = check_strict_assumption(phi, norm)?;
    let v = dhtest::d_emancipated_zero_support_form(rho, norm.ball(rho)?, opts)?.entropy;
    Ok((v / l + 1e-9).floor().max(0.0) as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Dilution,
    Distillation,
}

#[derive(Clone, Debug)]
pub enum MapIngredients {
    /// Lambda(Z) = <Z, phi> X.
    Dilution { phi: Operator, x: Operator },
    /// Lambda(Z) = <Q, Z> phi.
    Distillation { q: Operator, phi: Operator },
}

/// Lambda(Z) = <functional, Z> image.
#[derive(Clone, Debug)]
pub struct OneShotMap {
    pub kind: MapKind,
    pub norm: NormTag,
    pub input: NormBall,
    pub output: NormBall,
    pub functional: Operator,
    pub image: Operator,
}

impl OneShotMap {
    pub fn apply(&self, z: &Operator) -> Result<Operator> {
        if z.rows() != self.functional.rows() || !z.is_square() {
            return Err(Error::DimensionMismatch(format!("map input is {}-dimensional", self.functional.rows())));
        }
        Ok(self.image.scale_c(self.functional.inner(z)))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MapCertificate {
    pub probes: usize,
    pub max_ratio_trace: f64,
    pub max_ratio_mu: f64,
    /// ||Lambda(phi) - rho||_1 for dilution, |<Q,rho> - 1| for distillation.
    pub transformation_error: Option<f64>,
    pub passed: bool,
}

/// Checks the feasibility conditions, then measures contraction on `probes`
/// random Hermitian inputs plus the map's own ingredients.
pub fn build_one_shot_map(ingredients: MapIngredients, norm: NormTag, target: Option<&Operator>, eps: f64, probes: usize, seed: u64) -> Result<(OneShotMap, MapCertificate)> {
    if !closed_form(norm) {
        return Err(Error::Unsupported(format!("maps are certified for closed-form norms, got '{}'", norm.name())));
    }
    let map = match ingredients {
        MapIngredients::Dilution { phi, x } => {
            let (input, output) = (norm.ball(&phi)?, norm.ball(&x)?);
            let need = 1.0 / input.dual_norm(&phi)?;
            let xn = output.primal_norm(&x)?;
            if xn > need * (1.0 + FEASIBILITY_TOL) {
                return Err(Error::InvalidInput(format!("infeasible dilution: ||X||_mu = {xn} > 1/||phi||° = {need}")));
            }
            let tn = phi.op_norm() * x.trace_norm();
            if tn > 1.0 + FEASIBILITY_TOL {
                return Err(Error::InvalidInput(format!("infeasible dilution: ||phi||_inf ||X||_1 = {tn} > 1")));
            }
            OneShotMap { kind: MapKind::Dilution, norm, input, output, functional: phi, image: x }
        }
        MapIngredients::Distillation { q, phi } => {
            let (input, output) = (norm.ball(&q)?, norm.ball(&phi)?);
            let qd = input.dual_norm(&q)? * output.primal_norm(&phi)?;
            if qd > 1.0 + FEASIBILITY_TOL {
                return Err(Error::InvalidInput(format!("infeasible distillation: ||Q||° ||phi||_mu = {qd} > 1")));
            }
            let qi = q.op_norm() * phi.trace_norm();
            if qi > 1.0 + FEASIBILITY_TOL {
                return Err(Error::InvalidInput(format!("infeasible distillation: ||Q||_inf ||phi||_1 = {qi} > 1")));
            }
            OneShotMap { kind: MapKind::Distillation, norm, input, output, functional: q, image: phi }
        }
    };
    if !map.functional.is_hermitian() || !map.image.is_hermitian() {
        return Err(Error::NotHermitian(map.functional.hermitian_deviation().max(map.image.hermitian_deviation())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = map.functional.rows();
    let mut inputs: Vec<Operator> = (0..probes).map(|_| random_hermitian(&mut rng, d)).collect();
    inputs.push(map.functional.clone());
    if map.kind == MapKind::Dilution {
        inputs.push(Operator::identity(d).scale(1.0 / d as f64));
    }
    let (mut rt, mut rm) = (0.0f64, 0.0f64);
    for z in &inputs {
        let out = map.apply(z)?.hermitian_part();
        let (zt, zm) = (z.trace_norm(), map.input.primal_norm(z)?);
        if zt > 0.0 && zm > 0.0 {
            rt = rt.max(out.trace_norm() / zt);
            rm = rm.max(map.output.primal_norm(&out)? / zm);
        }
    }
    let transformation_error = match (target, map.kind) {
        (None, _) => None,
        (Some(rho), MapKind::Dilution) => Some((&map.apply(&map.functional)?.hermitian_part() - rho).trace_norm()),
        (Some(rho), MapKind::Distillation) => Some((map.functional.re_inner(rho) - 1.0).abs()),
    };
    let ok_err = transformation_error.map_or(true, |e| e <= eps + FEASIBILITY_TOL);
    let passed = rt <= 1.0 + CONTRACTION_TOL && rm <= 1.0 + CONTRACTION_TOL && ok_err;
    Ok((map, MapCertificate { probes: inputs.len(), max_ratio_trace: rt, max_ratio_mu: rm, transformation_error, passed }))
}

/// Rescales a witness W to a distillation test Q = W / max(||W||_inf, ||W||° ||phi||_mu).
pub fn normalised_distillation_test(w: &Operator, phi: &Operator, norm: NormTag) -> Result<Operator> {
    let dual = norm.ball(w)?.dual_norm(w)? * norm.ball(phi)?.primal_norm(phi)?;
    let s = w.op_norm().max(dual);
    if s <= 0.0 {
        return Err(Error::InvalidInput("zero witness".into()));
    }
    Ok(w.scale(1.0 / s))
}

#[derive(Clone, Debug, Serialize)]
pub struct MixtureBound {
    /// sum_x p_x log(1/||Pi_x||°).
    pub weighted: f64,
    /// H(p).
    pub entropy: f64,
    pub value: f64,
    pub l_phi: f64,
    pub bound: f64,
}

/// (sum_x p_x log(1/||Pi_x||°_gamma) - H(p)) / L_mu(phi) for mutually orthogonal projectors.
pub fn mixture_cost_bound(p: &[f64], projectors: &[Operator], ball: NormBall, phi: &Operator, mu: NormTag, reg: Regularisation, opts: &SolverOptions) -> Result<MixtureBound> {
    if p.len() != projectors.len() || p.is_empty() {
        return Err(Error::InvalidInput("need one weight per projector".into()));
    }
    if p.iter().any(|&x| !(0.0..=1.0 + 1e-12).contains(&x)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("weights must form a probability distribution".into()));
    }
    for (i, a) in projectors.iter().enumerate() {
        if !a.is_hermitian() || (a * a).max_abs_diff(a) > 1e-8 {
            return Err(Error::InvalidInput(format!("operator {i} is not an orthogonal projector")));
        }
        for b in &projectors[..i] {
            if (a * b).max_abs_diff(&Operator::zeros(a.rows(), a.cols())) > 1e-8 {
                return Err(Error::InvalidInput("projectors are not mutually orthogonal".into()));
            }
        }
    }
    let mut weighted = 0.0;
    let mut entropy = 0.0;
    for (&px, pi) in p.iter().zip(projectors) {
        if px > 0.0 {
            weighted += px * -log2(ball.dual_norm(pi)?);
            entropy -= px * px.log2();
        }
    }
    let value = weighted - entropy;
    let l = log_norm_estimate(phi, mu, reg, opts)?.value;
    Ok(MixtureBound { weighted, entropy, value, l_phi: l, bound: ratio(value, l) })
}

#[derive(Clone, Debug, Serialize)]
pub struct NoFreeLunchReport {
    /// ||phi^n|| ||phi^n||° for n = 1, 2 where affordable; each must be >= 1.
    pub products: Vec<(usize, f64)>,
    pub l: f64,
    pub neg_l_dual: f64,
    /// -L° / L, at most 1.
    pub dual_ratio: f64,
    /// log2 of the tempered value of rho.
    pub tempered: f64,
    /// log2 ||rho||, which the tempered value may not exceed.
    pub log_norm: f64,
    pub passed: bool,
}

/// Norm/dual consistency for a multiplicative ball: ||phi^n|| ||phi^n||° >= 1,
/// -L° <= L, and tempered(rho) <= log ||rho||.
pub fn no_free_lunch_renormalized_check(rho: &Operator, phi: &Operator, ball: NormBall, opts: &SolverOptions) -> Result<NoFreeLunchReport> {
    let tag = ball.tag();
    let pb = tag.ball(phi)?;
    let mut products = Vec::new();
    for n in 1..=2 {
        if ball_power_supported(pb, n) {
            let b = ball_power(pb, n);
            let x = power_in(phi, pb, n)?;
            products.push((n, b.primal_norm(&x)? * b.dual_norm(&x)?));
        }
    }
    let l = log2(pb.primal_norm(phi)?);
    let neg_l_dual = -log2(pb.dual_norm(phi)?);
    let dual_ratio = if l > TRIVIAL_DEN { neg_l_dual / l } else { 0.0 };
    let tempered = log2(dhtest::tempered(rho, ball, opts)?.value);
    let log_norm = log2(ball.primal_norm(rho)?);
    let passed = products.iter().all(|&(_, v)| v >= 1.0 - 1e-9) && neg_l_dual <= l + 1e-9 && tempered <= log_norm + 1e-6;
    Ok(NoFreeLunchReport { products, l, neg_l_dual, dual_ratio, tempered, log_norm, passed })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// omega_d against Phi_2.
    EntanglementOmega { d: usize },
    /// Norrell state against H+.
    QutritMagic,
    /// Hoggar state against T, under [`HOGGAR_CONJECTURE`].
    QubitMagicConditional,
}

impl Scenario {
    pub const NAMES: [&'static str; 3] = ["entanglement-omega", "qutrit-magic", "qubit-magic-conditional"];

    /// `entanglement-omega` (d = 3), `entanglement-omega<d>`, `qutrit-magic` or `qubit-magic-conditional`.
    pub fn parse(s: &str) -> Result<Scenario> {
        match s {
            "qutrit-magic" => return Ok(Scenario::QutritMagic),
            "qubit-magic-conditional" => return Ok(Scenario::QubitMagicConditional),
            "entanglement-omega" => return Ok(Scenario::EntanglementOmega { d: 3 }),
            _ => {}
        }
        if let Some(d) = s.strip_prefix("entanglement-omega").and_then(|r| r.parse::<usize>().ok()) {
            if (3..=9).contains(&d) {
                return Ok(Scenario::EntanglementOmega { d });
            }
        }
        Err(Error::InvalidInput(format!("unknown scenario '{s}' (expected one of {})", Scenario::NAMES.join(", "))))
    }

    pub fn name(&self) -> String {
        match self {
            Scenario::EntanglementOmega { d } => format!("entanglement-omega{d}"),
            Scenario::QutritMagic => "qutrit-magic".into(),
            Scenario::QubitMagicConditional => "qubit-magic-conditional".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictBound {
    pub direction: Direction,
    /// The rate being bounded, e.g. "r(N -> Hplus)".
    pub rate: String,
    pub value: f64,
    pub formula: String,
    pub ingredients: Vec<Ingredient>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IrreversibilityReport {
    pub scenario: String,
    pub bounds: Vec<VerdictBound>,
    /// Product of the two rate bounds; reversibility would need it >= 1.
    pub product: f64,
    /// Cost lower bound minus distillable upper bound, for scenarios that compare against one reference state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditional_on: Option<String>,
    #[serde(skip)]
    pub reports: Vec<RateBoundReport>,
}

impl IrreversibilityReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serialises")
    }
}

struct Plan {
    resource: (String, Operator),
    target: (String, Operator),
    ball: NormBall,
    mu: NormTag,
    reg: Regularisation,
}

/// Cost of `target` from `resource`, and distillation of `resource` from `target`, run concurrently.
fn run_plan(plan: &Plan, opts: &SolverOptions) -> Result<(RateBoundReport, RateBoundReport)> {
    let (rname, rop) = &plan.resource;
    let (tname, top) = &plan.target;
    let (cost, dist) = std::thread::scope(|s| {
        let c = s.spawn(|| cost_lower_bound(top, rop, plan.ball, plan.mu, plan.reg, opts));
        let d = s.spawn(|| distillable_upper_bound(top, rop, plan.mu, true, opts));
        (c.join(), d.join())
    });
    let join = |r: std::thread::Result<Result<RateBoundReport>>| r.unwrap_or_else(|_| Err(Error::Solver(format!("bound computation for {rname}/{tname} panicked"))));
    Ok((join(cost)?, join(dist)?))
}

pub fn irreversibility_verdict(scenario: Scenario, opts: &SolverOptions) -> Result<IrreversibilityReport> {
    let plan = match scenario {
        Scenario::EntanglementOmega { d } => Plan {
            resource: ("Phi2".into(), states::max_entangled(2)?),
            target: (format!("omega{d}"), states::omega(d)?),
            ball: NormBall::Reshuffled { da: d, db: d },
            mu: NormTag::SepBase,
            reg: Regularisation::Limit,
        },
        Scenario::QutritMagic => Plan {
            resource: ("N".into(), states::norrell().operator),
            target: ("Hplus".into(), states::h_plus().operator),
            ball: NormBall::Wigner { n: 1 },
            mu: NormTag::FwBase,
            reg: Regularisation::Copies(2),
        },
        Scenario::QubitMagicConditional => Plan {
            resource: ("Hog".into(), states::hoggar(None)?.operator),
            target: ("T".into(), states::t_state().operator),
            ball: NormBall::Stabiliser { n: 1 },
            mu: NormTag::StabBase,
            reg: Regularisation::HoggarConjecture,
        },
    };
    let (cost, dist) = run_plan(&plan, opts)?;
    let (r, t) = (&plan.resource.0, &plan.target.0);
    let product = cost.rate_bound * dist.bound;
    let conditional_on = cost.conditional_on.clone().or_else(|| dist.conditional_on.clone());
    let verdict = if product < 1.0 - VERDICT_MARGIN {
        if conditional_on.is_some() {
            "conditionally irreversible"
        } else {
            "irreversible"
        }
    } else {
        "inconclusive"
    };
    let gap = matches!(scenario, Scenario::EntanglementOmega { .. }).then(|| cost.bound - dist.bound);
    let bounds = vec![
        VerdictBound { direction: cost.direction, rate: format!("r({r} -> {t})"), value: cost.rate_bound, formula: cost.rate_formula(), ingredients: cost.ingredients.clone() },
        VerdictBound { direction: dist.direction, rate: format!("r({t} -> {r})"), value: dist.bound, formula: dist.rate_formula(), ingredients: dist.ingredients.clone() },
    ];
    Ok(IrreversibilityReport { scenario: scenario.name(), bounds, product, gap, verdict: verdict.into(), conditional_on, reports: vec![cost, dist] })
}
