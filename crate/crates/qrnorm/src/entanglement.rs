//! Entanglement monotones: negativity, reshuffled negativity, pure-state SEP
//! norms, the tempered SDPs and the omega_d witness.

use nalgebra::DVector;
use serde::Serialize;

use crate::conic::{MatExpr, Model, SolverOptions};
use crate::dhtest::{self, bipartite_dims, NormBall};
use crate::linalg::{schmidt_coefficients, Operator, C64};
use crate::states;
use crate::{log2, Error, Result};

fn split(x: &Operator) -> Result<Operator> {
    let (da, db) = bipartite_dims(x)?;
    x.clone().with_dims(vec![da, db])
}

/// ||X^Gamma||_1.
pub fn negativity(x: &Operator) -> Result<f64> {
    Ok(split(x)?.partial_transpose_b()?.trace_norm())
}

pub fn log_negativity(x: &Operator) -> Result<f64> {
    Ok(log2(negativity(x)?))
}

/// ||X^R||_1.
pub fn reshuffled_negativity(x: &Operator) -> Result<f64> {
    Ok(split(x)?.reshuffle()?.trace_norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PureSepNorms {
    /// ||phi||_SEP = 1 + 2 R^s.
    pub base_norm: f64,
    pub one_plus_rs: f64,
    /// ||phi||_SEP dual, the largest overlap with a product state.
    pub dual_overlap: f64,
}

/// Closed forms for a pure state: with p_i the squared Schmidt coefficients,
/// 1 + R^s = (sum sqrt p_i)^2 and the dual overlap is max p_i.
pub fn pure_sep_norms(v: &DVector<C64>, da: usize, db: usize) -> Result<PureSepNorms> {
    let nrm = v.norm();
    if (nrm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("state vector not normalised (norm {nrm:.6})")));
    }
    let s = schmidt_coefficients(v, da, db)?;
    let one_plus_rs = s.iter().sum::<f64>().powi(2);
    let dual_overlap = s.iter().fold(0.0, |m: f64, x| m.max(x * x));
    Ok(PureSepNorms { base_norm: 2.0 * one_plus_rs - 1.0, one_plus_rs, dual_overlap })
}

/// SEP base norm: exact for pure states, otherwise a relaxation.
#[derive(Clone, Debug, Serialize)]
pub struct SepValue {
    pub value: f64,
    pub exact: bool,
    pub method: &'static str,
}

/// Mixed inputs return max(||X^Gamma||_1, ||X^R||_1), a lower bound on ||X||_SEP.
pub fn sep_base_norm(x: &Operator) -> Result<SepValue> {
    let (da, db) = bipartite_dims(x)?;
    if x.is_hermitian() && (x.trace().re - 1.0).abs() < 1e-9 {
        if let Some(v) = crate::linalg::pure_state_vector(x, 1e-9) {
            return Ok(SepValue { value: pure_sep_norms(&v, da, db)?.base_norm, exact: true, method: "pure-state Schmidt formula" });
        }
    }
    let value = negativity(x)?.max(reshuffled_negativity(x)?);
    Ok(SepValue { value, exact: false, method: "relaxation: max(negativity, reshuffled negativity) lower bound" })
}

pub fn negativity_ball(rho: &Operator) -> Result<NormBall> {
    let (da, db) = bipartite_dims(rho)?;
    Ok(NormBall::Negativity { da, db })
}

pub fn reshuffled_ball(rho: &Operator) -> Result<NormBall> {
    let (da, db) = bipartite_dims(rho)?;
    Ok(NormBall::Reshuffled { da, db })
}

/// E_tau(rho) in log2 units.
pub fn tempered_negativity(rho: &Operator, opts: &SolverOptions) -> Result<f64> {
    Ok(log2(dhtest::tempered(rho, negativity_ball(rho)?, opts)?.value))
}

/// N^R_tau(rho) in log2 units.
pub fn tempered_reshuffled_negativity(rho: &Operator, opts: &SolverOptions) -> Result<f64> {
    Ok(log2(dhtest::tempered(rho, reshuffled_ball(rho)?, opts)?.value))
}

/// 1 + R^g over PPT states: min Tr S with S >= rho, S^Gamma >= 0. A lower bound on 1 + R^g_SEP.
pub fn ppt_gen_robustness_lower(rho: &Operator, opts: &SolverOptions) -> Result<f64> {
    let (da, db) = bipartite_dims(rho)?;
    let mut m = Model::new();
    let s = m.hermitian_var(rho.rows());
    m.add_psd(&s.minus(&MatExpr::from_operator(rho)))?;
    m.add_psd(&s.partial_transpose_b(da, db))?;
    m.minimize(s.trace());
    m.solve(opts)?.certified_value()
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessCheck {
    pub name: &'static str,
    pub value: f64,
    pub expected: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaWitnessReport {
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    pub checks: Vec<WitnessCheck>,
    /// Upper bound 1/(d-1) on R^g_SEP(omega_d) from the explicit decomposition.
    pub rg_upper: f64,
    pub all_passed: bool,
}

/// W_d = alpha P_d - beta Phi_d: ||W^R||_inf = 1, <W,omega> = alpha = ||W||_inf,
/// and omega + Phi/(d-1) = P_d/(d-1) with P_d/d separable.
pub fn verify_omega_witness(d: usize) -> Result<OmegaWitnessReport> {
    if d < 3 {
        return Err(Error::InvalidInput("omega_d needs d >= 3".into()));
    }
    let (alpha, beta) = (states::alpha(d), states::beta(d));
    let w = states::omega_witness(d)?;
    let om = states::omega(d)?;
    let phi = states::max_entangled(d)?;
    let p = states::correlated_projector(d)?;
    let mut checks = Vec::new();
    let mut push = |name, value: f64, expected: f64, tol: f64| checks.push(WitnessCheck { name, value, expected, passed: (value - expected).abs() <= tol });
    push("witness_reshuffled_op_norm", w.reshuffle()?.op_norm(), 1.0, 1e-10);
    push("witness_overlap", w.re_inner(&om), alpha, 1e-10);
    push("witness_op_norm", w.op_norm(), alpha, 1e-10);
    let k = 1.0 / (d as f64 - 1.0);
    let lhs = &om + &phi.scale(k);
    push("decomposition_residual", lhs.max_abs_diff(&p.scale(k)), 0.0, 1e-12);
    // P_d / d is a uniform mixture of product states |ii>, so its negativity is 1.
    push("diag_state_separable", negativity(&p.scale(1.0 / d as f64).with_dims(vec![d, d])?)?, 1.0, 1e-12);
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(OmegaWitnessReport { d, alpha, beta, checks, rg_upper: k, all_passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ket;
    use crate::linalg::c;

    #[test]
    fn phi2_negativities() {
        for n in 1..=4 {
            let e = states::phi2_power(n).unwrap();
            let want = 2f64.powi(n as i32);
            assert!((negativity(&e.operator).unwrap() - want).abs() < 1e-9);
            assert!((reshuffled_negativity(&e.operator).unwrap() - want).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_sep_phi2() {
        let v = states::max_entangled_ket(2);
        let s = pure_sep_norms(&v, 2, 2).unwrap();
        assert!((s.base_norm - 3.0).abs() < 1e-12);
        assert!((s.dual_overlap - 0.5).abs() < 1e-12);
        let prod = ket(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let s = pure_sep_norms(&prod, 2, 2).unwrap();
        assert!((s.base_norm - 1.0).abs() < 1e-12 && (s.dual_overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn omega_witness_reports_pass() {
        for d in 3..=5 {
            let r = verify_omega_witness(d).unwrap();
            assert!(r.all_passed, "{:?}", r.checks);
        }
    }

    #[test]
    fn mixed_sep_request_is_marked() {
        let r = sep_base_norm(&states::omega(3).unwrap()).unwrap();
        assert!(!r.exact);
    }
}
