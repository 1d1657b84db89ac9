//! Named states and witnesses.
//!
//! Conventions: basis index of a bipartite ket |ij> is `i*dB + j`; `P_d` is the
//! projector `sum_i |ii><ii|` (not normalised), so that `omega_d = (P_d - Phi_d)/(d-1)`
//! has unit trace. The separable state `P_d / d` is available as [`diag_correlated`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DVector;

use crate::linalg::{c, normalize, Operator, C64};
use crate::{Error, Result};

/// Which resource theory a named state belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum System {
    /// Bipartite d_A x d_B.
    Bipartite(usize, usize),
    /// n qutrits.
    Qutrits(usize),
    /// n qubits.
    Qubits(usize),
}

#[derive(Clone, Debug)]
pub struct StateZooEntry {
    pub name: String,
    pub operator: Operator,
    /// State vector for pure entries.
    pub ket: Option<DVector<C64>>,
    pub system: System,
    pub notes: &'static str,
}

fn ket_real(v: &[f64]) -> DVector<C64> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0)))
}

fn pure(name: &str, v: DVector<C64>, system: System, notes: &'static str) -> StateZooEntry {
    let v = normalize(&v);
    let dims = match system {
        System::Bipartite(a, b) => vec![a, b],
        System::Qutrits(n) => vec![3; n],
        System::Qubits(n) => vec![2; n],
    };
    let operator = Operator::projector(&v).hermitian_part().with_dims(dims).expect("zoo dims");
    StateZooEntry { name: name.into(), operator, ket: Some(v), system, notes }
}

/// |Phi_d> = sum_i |ii> / sqrt(d).
pub fn max_entangled_ket(d: usize) -> DVector<C64> {
    let mut v = DVector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = c(1.0 / (d as f64).sqrt(), 0.0);
    }
    v
}

pub fn max_entangled(d: usize) -> Result<Operator> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("maximally entangled state needs d >= 2, got {d}")));
    }
    Operator::projector(&max_entangled_ket(d)).hermitian_part().with_dims(vec![d, d])
}

/// Projector sum_i |ii><ii| onto the correlated subspace.
pub fn correlated_projector(d: usize) -> Result<Operator> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("d >= 2 required, got {d}")));
    }
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    Operator::diag(&v).with_dims(vec![d, d])
}

/// Separable state P_d / d.
pub fn diag_correlated(d: usize) -> Result<Operator> {
    Ok(correlated_projector(d)?.scale(1.0 / d as f64))
}

/// omega_d = (P_d - Phi_d)/(d - 1), d >= 3.
pub fn omega(d: usize) -> Result<Operator> {
    if d < 3 {
        return Err(Error::InvalidInput(format!("omega_d needs d >= 3, got {d}")));
    }
    let p = correlated_projector(d)?;
    let phi = max_entangled(d)?;
    (&p - &phi).scale(1.0 / (d as f64 - 1.0)).hermitian_part().with_dims(vec![d, d])
}

pub fn alpha(d: usize) -> f64 {
    if d == 3 {
        2.0
    } else {
        d as f64 / (d as f64 - 2.0)
    }
}

pub fn beta(d: usize) -> f64 {
    if d == 3 {
        3.0
    } else {
        2.0 * d as f64 / (d as f64 - 2.0)
    }
}

/// W_d = alpha_d P_d - beta_d Phi_d.
pub fn omega_witness(d: usize) -> Result<Operator> {
    let p = correlated_projector(d)?;
    let phi = max_entangled(d)?;
    (&p.scale(alpha(d)) - &phi.scale(beta(d))).hermitian_part().with_dims(vec![d, d])
}

/// Qutrit Hadamard (1/sqrt 3)[[1,1,1],[1,w,w^2],[1,w^2,w]].
pub fn qutrit_hadamard() -> Operator {
    let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
    let s = 1.0 / 3f64.sqrt();
    Operator::from_fn(3, 3, |i, j| w.powu(((i * j) % 3) as u32) * s)
}

fn hadamard_eigenvector(lambda: C64) -> DVector<C64> {
    let h = qutrit_hadamard();
    let e = nalgebra::DMatrix::from_fn(3, 3, |i, j| h.get(i, j) - if i == j { lambda } else { C64::default() });
    // the null vector of (H - lambda I): smallest singular vector
    let svd = e.svd(false, true);
    let vt = svd.v_t.expect("svd");
    let k = (0..3).min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b])).unwrap();
    let v: DVector<C64> = vt.row(k).transpose().map(|z| z.conj());
    fix_phase(&normalize(&v))
}

/// Rotate so the first non-negligible amplitude is real positive.
pub fn fix_phase(v: &DVector<C64>) -> DVector<C64> {
    match v.iter().find(|z| z.norm() > 1e-9) {
        Some(z0) => {
            let ph = z0.conj() / z0.norm();
            v.map(|z| z * ph)
        }
        None => v.clone(),
    }
}

pub fn strange() -> StateZooEntry {
    pure("S", ket_real(&[0.0, 1.0, -1.0]), System::Qutrits(1), "(|1> - |2>)/sqrt2")
}

pub fn norrell() -> StateZooEntry {
    pure("N", ket_real(&[-1.0, 2.0, -1.0]), System::Qutrits(1), "(-|0> + 2|1> - |2>)/sqrt6")
}

pub fn h_plus() -> StateZooEntry {
    pure("Hplus", hadamard_eigenvector(c(1.0, 0.0)), System::Qutrits(1), "+1 eigenvector of the qutrit Hadamard")
}

pub fn h_minus() -> StateZooEntry {
    pure("Hminus", hadamard_eigenvector(c(-1.0, 0.0)), System::Qutrits(1), "-1 eigenvector of the qutrit Hadamard")
}

pub fn h_i() -> StateZooEntry {
    pure("Hi", hadamard_eigenvector(c(0.0, 1.0)), System::Qutrits(1), "+i eigenvector of the qutrit Hadamard")
}

pub fn qutrit_zoo() -> Vec<StateZooEntry> {
    vec![strange(), norrell(), h_plus(), h_minus(), h_i()]
}

/// |T> = (|0> + e^{i pi/4}|1>)/sqrt2.
pub fn t_state() -> StateZooEntry {
    let v = DVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.0), C64::from_polar(FRAC_1_SQRT_2, PI / 4.0)]);
    pure("T", v, System::Qubits(1), "(|0> + e^{i pi/4}|1>)/sqrt2")
}

/// Unnormalised Hoggar fiducial (-1+2i, 1, 1, 1, 1, 1, 1, 1).
pub fn hoggar_fiducial() -> DVector<C64> {
    let mut v = DVector::from_element(8, c(1.0, 0.0));
    v[0] = c(-1.0, 2.0);
    v
}

/// Hoggar state, optionally moved along its Pauli orbit by a 3-letter Pauli string.
pub fn hoggar(pauli: Option<&str>) -> Result<StateZooEntry> {
    let mut v = hoggar_fiducial();
    if let Some(label) = pauli {
        let p = crate::stab::PauliString::parse(label)?;
        if p.n() != 3 {
            return Err(Error::InvalidInput("Hoggar orbit needs a 3-qubit Pauli string".into()));
        }
        v = p.operator().mat() * v;
    }
    Ok(pure("Hog", v, System::Qubits(3), "Hoggar fiducial (-1+2i,1,...,1)/sqrt12"))
}

fn bipartite_entry(name: &str, op: Operator, d: usize, ket: Option<DVector<C64>>, notes: &'static str) -> StateZooEntry {
    StateZooEntry { name: name.into(), operator: op, ket, system: System::Bipartite(d, d), notes }
}

/// Phi_2^{(x)n} grouped as a (2^n) x (2^n) bipartite state.
pub fn phi2_power(n: usize) -> Result<StateZooEntry> {
    if n == 0 {
        return Err(Error::InvalidInput("copies must be >= 1".into()));
    }
    let k = max_entangled_ket(2);
    let mut v = k.clone();
    let mut dims = vec![2, 2];
    for _ in 1..n {
        v = v.kronecker(&k);
        dims.extend([2, 2]);
    }
    let op = Operator::projector(&v).hermitian_part().with_dims(dims)?;
    let mask: Vec<bool> = (0..2 * n).map(|s| s % 2 == 0).collect();
    let grouped = op.regroup(&mask)?;
    let ket = crate::linalg::pure_state_vector(&grouped, 1e-9);
    let d = 1 << n;
    Ok(bipartite_entry(&format!("phi2^{n}"), grouped, d, ket, "n copies of the two-qubit maximally entangled state"))
}

/// Look up a zoo state: phi<d>, phi2^<n>, omega<d>, P<d> (=P_d/d), S, N, Hplus, Hminus, Hi, T, Hog, Hog:<pauli>.
pub fn zoo(name: &str) -> Result<StateZooEntry> {
    let num = |rest: &str| rest.parse::<usize>().map_err(|_| Error::InvalidInput(format!("unknown zoo state '{name}'")));
    match name {
        "S" => return Ok(strange()),
        "N" => return Ok(norrell()),
        "Hplus" | "H+" => return Ok(h_plus()),
        "Hminus" | "H-" => return Ok(h_minus()),
        "Hi" => return Ok(h_i()),
        "T" => return Ok(t_state()),
        "Hog" => return hoggar(None),
        _ => {}
    }
    if let Some(p) = name.strip_prefix("Hog:") {
        return hoggar(Some(p));
    }
    if let Some(rest) = name.strip_prefix("phi2^") {
        return phi2_power(num(rest)?);
    }
    if let Some(rest) = name.strip_prefix("phi") {
        let d = num(rest)?;
        return Ok(bipartite_entry(name, max_entangled(d)?, d, Some(max_entangled_ket(d)), "maximally entangled state"));
    }
    if let Some(rest) = name.strip_prefix("omega") {
        let d = num(rest)?;
        return Ok(bipartite_entry(name, omega(d)?, d, None, "(P_d - Phi_d)/(d-1)"));
    }
    if let Some(rest) = name.strip_prefix('P') {
        let d = num(rest)?;
        return Ok(bipartite_entry(name, diag_correlated(d)?, d, None, "separable state P_d/d"));
    }
    Err(Error::InvalidInput(format!("unknown zoo state '{name}'")))
}

pub const ZOO_NAMES: &[&str] =
    &["phi2", "phi3", "phi2^2", "phi2^3", "phi2^4", "omega3", "omega4", "omega5", "P3", "S", "N", "Hplus", "Hminus", "Hi", "T", "Hog"];

#[cfg(test)]
mod tests {
    use super::*;

    fn check_state(e: &StateZooEntry) {
        let r = &e.operator;
        assert!((r.trace().re - 1.0).abs() < 1e-12, "{}", e.name);
        assert!(r.trace().im.abs() < 1e-12);
        assert!(r.min_eigenvalue().unwrap() >= -1e-12, "{} {}", e.name, r.min_eigenvalue().unwrap());
        if e.ket.is_some() {
            let purity = (r * r).trace().re;
            assert!((purity - 1.0).abs() < 1e-10, "{}", e.name);
        }
    }

    #[test]
    fn zoo_entries_are_states() {
        for n in ZOO_NAMES {
            check_state(&zoo(n).unwrap());
        }
        check_state(&zoo("Hog:XZI").unwrap());
    }

    #[test]
    fn omega_traces_and_support() {
        for d in 3..=6 {
            let w = omega(d).unwrap();
            assert!((w.trace().re - 1.0).abs() < 1e-12);
            let phi = max_entangled(d).unwrap();
            assert!(w.re_inner(&phi).abs() < 1e-12);
        }
        // entrywise formula (1/(d(d-1))) sum_{ij} (|ii><ii| - |ii><jj|)
        let d = 3;
        let w = omega(d).unwrap();
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j { (d as f64 - 1.0) / (d * (d - 1)) as f64 } else { -1.0 / (d * (d - 1)) as f64 };
                assert!((w.get(i * d + i, j * d + j).re - expect).abs() < 1e-14);
            }
        }
        assert!(omega(2).is_err());
    }

    #[test]
    fn hadamard_eigenstates() {
        let h = qutrit_hadamard();
        for (e, lam) in [(h_plus(), c(1.0, 0.0)), (h_minus(), c(-1.0, 0.0)), (h_i(), c(0.0, 1.0))] {
            let v = e.ket.unwrap();
            let hv = h.mat() * &v;
            assert!((hv - v * lam).norm() < 1e-12, "{}", e.name);
        }
        let a = h_plus().ket.unwrap();
        let b = h_minus().ket.unwrap();
        assert!(a.dotc(&b).norm() < 1e-12);
    }

    #[test]
    fn hoggar_normalisation() {
        assert!((hoggar_fiducial().norm_squared() - 12.0).abs() < 1e-14);
    }
}
