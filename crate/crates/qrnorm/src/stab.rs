//! Qubit stabiliser machinery: Pauli strings, the stabiliser norm and its dual,
//! pure stabiliser states for n <= 3, and STAB base norm / robustness programs.
//!
//! Qubit 0 is the most significant bit of a basis index.

use std::collections::{HashSet, VecDeque};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::conic::{LinExpr, MatExpr, Model, SolverOptions};
use crate::linalg::{c, Operator, C64};
use crate::{log2, Error, Result};

/// Largest register handled by enumeration and the STAB programs.
pub const MAX_STAB_QUBITS: usize = 3;
/// Largest register for Pauli-sum norms.
pub const MAX_PAULI_QUBITS: usize = 6;

/// A value quoted from the literature that is not recomputed here.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ImportedConstant {
    pub name: &'static str,
    pub value: f64,
    pub provenance: &'static str,
}

/// Upper bound on the regularised STAB base norm of |T>, stored as the argument of the log.
pub const T_STAB_REGULARISED: ImportedConstant = ImportedConstant {
    name: "L_STAB(T) <= log 1.29",
    value: 1.29,
    provenance: "imported from the stabiliser extent literature (Heinrich-Gross); not recomputable here",
};

/// n-qubit Pauli string; letters 0..4 stand for I, X, Y, Z.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<u8>,
}

impl PauliString {
    pub fn new(letters: Vec<u8>) -> Result<Self> {
        if letters.is_empty() || letters.iter().any(|&l| l > 3) {
            return Err(Error::InvalidInput("Pauli letters must be in 0..4 and non-empty".into()));
        }
        Ok(PauliString { letters })
    }

    pub fn parse(label: &str) -> Result<Self> {
        let letters = label
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(0),
                'X' => Ok(1),
                'Y' => Ok(2),
                'Z' => Ok(3),
                _ => Err(Error::InvalidInput(format!("bad Pauli letter '{ch}' in '{label}'"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        PauliString::new(letters)
    }

    /// The `index`-th string in base-4 order (qubit 0 most significant).
    pub fn from_index(n: usize, mut index: usize) -> Self {
        let mut letters = vec![0u8; n];
        for k in (0..n).rev() {
            letters[k] = (index % 4) as u8;
            index /= 4;
        }
        PauliString { letters }
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&l| l == 0)
    }

    pub fn label(&self) -> String {
        self.letters.iter().map(|&l| ['I', 'X', 'Y', 'Z'][l as usize]).collect()
    }

    /// P|j> = phase[j] |perm[j]>.
    pub fn action(&self) -> (Vec<usize>, Vec<C64>) {
        let n = self.n();
        let dim = 1usize << n;
        let mut perm = vec![0; dim];
        let mut phase = vec![c(1.0, 0.0); dim];
        for j in 0..dim {
            let mut out = j;
            let mut ph = c(1.0, 0.0);
            for (q, &l) in self.letters.iter().enumerate() {
                let bit = 1usize << (n - 1 - q);
                let one = j & bit != 0;
                match l {
                    1 => out ^= bit,
                    2 => {
                        out ^= bit;
                        ph *= if one { c(0.0, -1.0) } else { c(0.0, 1.0) };
                    }
                    3 => {
                        if one {
                            ph = -ph;
                        }
                    }
                    _ => {}
                }
            }
            perm[j] = out;
            phase[j] = ph;
        }
        (perm, phase)
    }

    pub fn operator(&self) -> Operator {
        let (perm, phase) = self.action();
        let dim = perm.len();
        let mut m = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            m[(perm[j], j)] = phase[j];
        }
        Operator::try_new(m, vec![2; self.n()]).expect("pauli dims")
    }

    /// Tr(X P) without materialising P.
    pub fn trace_with(&self, x: &Operator) -> C64 {
        let (perm, phase) = self.action();
        (0..perm.len()).map(|j| phase[j] * x.get(j, perm[j])).sum()
    }

    /// <psi|P|psi>.
    pub fn expectation(&self, psi: &DVector<C64>) -> C64 {
        let (perm, phase) = self.action();
        (0..perm.len()).map(|j| psi[perm[j]].conj() * phase[j] * psi[j]).sum()
    }
}

/// All 4^n Pauli strings in base-4 order, identity first.
pub fn all_paulis(n: usize) -> Vec<PauliString> {
    (0..1usize << (2 * n)).map(|i| PauliString::from_index(n, i)).collect()
}

/// Number of qubits of a 2^n-dimensional square operator.
pub fn qubit_count(x: &Operator) -> Result<usize> {
    let d = x.rows();
    if !x.is_square() || d < 2 || !d.is_power_of_two() {
        return Err(Error::DimensionMismatch(format!("expected a 2^n x 2^n operator, got {}x{}", x.rows(), x.cols())));
    }
    Ok(d.trailing_zeros() as usize)
}

fn check_hermitian(x: &Operator) -> Result<()> {
    if x.is_hermitian() {
        Ok(())
    } else {
        Err(Error::NotHermitian(x.hermitian_deviation()))
    }
}

/// Real Pauli coefficients Tr(X P), in base-4 order.
pub fn pauli_expectations(x: &Operator) -> Result<Vec<f64>> {
    let n = qubit_count(x)?;
    if n > MAX_PAULI_QUBITS {
        return Err(Error::TooLarge(format!("{n}-qubit Pauli sum")));
    }
    check_hermitian(x)?;
    Ok(all_paulis(n).iter().map(|p| p.trace_with(x).re).collect())
}

/// ||X||_P = 2^-n sum_P |Tr X P|.
pub fn stab_norm(x: &Operator) -> Result<f64> {
    let n = qubit_count(x)?;
    Ok(pauli_expectations(x)?.iter().map(|v| v.abs()).sum::<f64>() / (1usize << n) as f64)
}

/// ||X||_P dual = max_P |Tr X P|.
pub fn stab_norm_dual(x: &Operator) -> Result<f64> {
    Ok(pauli_expectations(x)?.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
}

// ---------------------------------------------------------------------------
// enumeration

#[derive(Clone, Debug)]
pub struct StabiliserStateSet {
    pub n: usize,
    pub vectors: Vec<DVector<C64>>,
}

impl StabiliserStateSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn projectors(&self) -> Vec<Operator> {
        self.vectors.iter().map(|v| Operator::projector(v).hermitian_part().with_dims(vec![2; self.n]).unwrap()).collect()
    }

    /// Pauli expectations of every state, one row per state (entries in {0, +-1}).
    pub fn expectation_table(&self) -> Vec<Vec<f64>> {
        let paulis = all_paulis(self.n);
        self.vectors.iter().map(|v| paulis.iter().map(|p| p.expectation(v).re.round()).collect()).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let vecs: Vec<Vec<[f64; 2]>> = self.vectors.iter().map(|v| v.iter().map(|z| [z.re, z.im]).collect()).collect();
        serde_json::json!({ "n": self.n, "count": self.len(), "vectors": vecs })
    }
}

fn fingerprint(v: &DVector<C64>) -> Vec<(i64, i64)> {
    let lead = v.iter().find(|z| z.norm() > 1e-9).copied().unwrap_or(c(1.0, 0.0));
    let rot = lead.conj() / lead.norm();
    v.iter()
        .map(|z| {
            let w = z * rot;
            ((w.re * 1e9).round() as i64, (w.im * 1e9).round() as i64)
        })
        .collect()
}

fn apply_h(v: &DVector<C64>, n: usize, q: usize) -> DVector<C64> {
    let bit = 1usize << (n - 1 - q);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = v.clone();
    for j in 0..v.len() {
        if j & bit == 0 {
            let (a, b) = (v[j], v[j | bit]);
            out[j] = (a + b) * s;
            out[j | bit] = (a - b) * s;
        }
    }
    out
}

fn apply_s(v: &DVector<C64>, n: usize, q: usize) -> DVector<C64> {
    let bit = 1usize << (n - 1 - q);
    let mut out = v.clone();
    for j in 0..v.len() {
        if j & bit != 0 {
            out[j] *= c(0.0, 1.0);
        }
    }
    out
}

fn apply_cnot(v: &DVector<C64>, n: usize, ctl: usize, tgt: usize) -> DVector<C64> {
    let (cb, tb) = (1usize << (n - 1 - ctl), 1usize << (n - 1 - tgt));
    let mut out = v.clone();
    for j in 0..v.len() {
        if j & cb != 0 {
            out[j ^ tb] = v[j];
        }
    }
    out
}

fn enumerate(n: usize) -> StabiliserStateSet {
    let mut start = DVector::zeros(1 << n);
    start[0] = c(1.0, 0.0);
    let mut seen = HashSet::new();
    seen.insert(fingerprint(&start));
    let mut queue = VecDeque::from([start.clone()]);
    let mut vectors = vec![start];
    while let Some(v) = queue.pop_front() {
        let mut next = Vec::new();
        for q in 0..n {
            next.push(apply_h(&v, n, q));
            next.push(apply_s(&v, n, q));
            for t in 0..n {
                if t != q {
                    next.push(apply_cnot(&v, n, q, t));
                }
            }
        }
        for w in next {
            if seen.insert(fingerprint(&w)) {
                vectors.push(w.clone());
                queue.push_back(w);
            }
        }
    }
    StabiliserStateSet { n, vectors }
}

/// Pure n-qubit stabiliser states (6, 60, 1080 for n = 1, 2, 3), cached.
pub fn enumerate_stabiliser_states(n: usize) -> Result<&'static StabiliserStateSet> {
    static CACHE: [OnceLock<StabiliserStateSet>; MAX_STAB_QUBITS] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    if n == 0 || n > MAX_STAB_QUBITS {
        return Err(Error::TooLarge(format!("stabiliser enumeration supports 1..={MAX_STAB_QUBITS} qubits, got {n}")));
    }
    Ok(CACHE[n - 1].get_or_init(|| enumerate(n)))
}

fn stab_qubits(x: &Operator) -> Result<usize> {
    let n = qubit_count(x)?;
    if n > MAX_STAB_QUBITS {
        return Err(Error::TooLarge(format!("STAB programs support at most {MAX_STAB_QUBITS} qubits")));
    }
    check_hermitian(x)?;
    Ok(n)
}

/// Pauli-coefficient variables w_P with W = 2^-n sum_P w_P P.
struct PauliVar {
    vars: Vec<LinExpr>,
    scale: f64,
}

impl PauliVar {
    fn new(m: &mut Model, n: usize) -> Self {
        PauliVar { vars: (0..1usize << (2 * n)).map(|_| m.add_var()).collect(), scale: 1.0 / (1usize << n) as f64 }
    }

    /// <W, Y> given the Pauli coefficients of Y.
    fn pair(&self, coeffs: &[f64]) -> LinExpr {
        let mut e = LinExpr::default();
        for (v, &y) in self.vars.iter().zip(coeffs) {
            if y != 0.0 {
                e = e.plus(&v.scale(y * self.scale));
            }
        }
        e
    }

    fn matrix(&self, n: usize) -> MatExpr {
        let dim = 1usize << n;
        let mut e = MatExpr::zeros(dim, dim);
        for (k, v) in self.vars.iter().enumerate() {
            let (perm, phase) = PauliString::from_index(n, k).action();
            let idx = *v.terms.keys().next().unwrap();
            e.terms.insert(idx, (0..dim).map(|j| ((perm[j], j), phase[j] * self.scale)).collect());
        }
        e
    }
}

/// A program value with its solver status folded in.
#[derive(Clone, Debug, Serialize)]
pub struct ProgramValue {
    pub value: f64,
    pub dual_value: f64,
    pub iterations: usize,
}

/// ||X||_STAB by LP: max <X,W> s.t. |<s|W|s>| <= 1 over pure stabiliser states.
pub fn stab_base_norm(x: &Operator, opts: &SolverOptions) -> Result<ProgramValue> {
    let n = stab_qubits(x)?;
    let set = enumerate_stabiliser_states(n)?;
    let table = set.expectation_table();
    let mut m = Model::new();
    let w = PauliVar::new(&mut m, n);
    let mut rows = Vec::with_capacity(2 * table.len());
    for t in &table {
        let e = w.pair(t);
        rows.push(LinExpr::constant(1.0).minus(&e));
        rows.push(LinExpr::constant(1.0).plus(&e));
    }
    m.add_nonneg(&rows);
    m.maximize(w.pair(&pauli_expectations(x)?));
    let sol = m.solve(opts)?;
    Ok(ProgramValue { value: sol.certified_value()?, dual_value: sol.dual_value(), iterations: sol.raw.iterations })
}

/// 1 + R^s_STAB(rho) = (||rho||_STAB + 1) / 2.
pub fn stab_one_plus_rs(rho: &Operator, opts: &SolverOptions) -> Result<f64> {
    Ok((stab_base_norm(rho, opts)?.value + 1.0) / 2.0)
}

/// ||rho||_STAB dual = max over stabiliser states of <s|rho|s> (the LP optimum sits at a vertex).
pub fn stab_dual_overlap(rho: &Operator) -> Result<f64> {
    let n = stab_qubits(rho)?;
    let set = enumerate_stabiliser_states(n)?;
    Ok(set.vectors.iter().map(|v| (v.adjoint() * rho.mat() * v)[(0, 0)].re).fold(f64::NEG_INFINITY, f64::max))
}

/// 1 + R^g_STAB(rho) = max <rho,W> s.t. W >= 0, <s|W|s> <= 1.
pub fn stab_gen_robustness(rho: &Operator, opts: &SolverOptions) -> Result<ProgramValue> {
    let n = stab_qubits(rho)?;
    let set = enumerate_stabiliser_states(n)?;
    let table = set.expectation_table();
    let mut m = Model::new();
    let w = PauliVar::new(&mut m, n);
    let rows: Vec<LinExpr> = table.iter().map(|t| LinExpr::constant(1.0).minus(&w.pair(t))).collect();
    m.add_nonneg(&rows);
    m.add_psd(&w.matrix(n))?;
    m.maximize(w.pair(&pauli_expectations(rho)?));
    let sol = m.solve(opts)?;
    Ok(ProgramValue { value: sol.certified_value()?, dual_value: sol.dual_value(), iterations: sol.raw.iterations })
}

/// P_tau(rho) in log2 units.
pub fn tempered_stab_norm(rho: &Operator, opts: &SolverOptions) -> Result<f64> {
    let n = stab_qubits(rho)?;
    let r = crate::dhtest::tempered(rho, crate::dhtest::NormBall::Stabiliser { n }, opts)?;
    Ok(log2(r.value))
}
