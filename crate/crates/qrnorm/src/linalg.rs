//! Dense complex operators on finite tensor-product spaces.
//!
//! [`Operator`] wraps an `nalgebra` matrix together with its tensor-factor
//! dimensions. The Hermitian eigensolver is Householder tridiagonalisation
//! followed by implicit-shift QL ([`hermitian_eigen`]); SVD is `nalgebra`'s.

use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Tolerance used to flag an operator as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug)]
pub struct Operator {
    mat: DMatrix<C64>,
    dims: Vec<usize>,
    hermitian: bool,
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: DMatrix<C64>,
}

impl Eigh {
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let n = self.values.len();
        let mut d = DMatrix::<C64>::zeros(n, n);
        for (i, &v) in self.values.iter().enumerate() {
            d[(i, i)] = c(v, 0.0);
        }
        &self.vectors * d * self.vectors.adjoint()
    }
}

fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Eigenvalues (ascending) and, if requested, eigenvectors of a Hermitian matrix.
///
/// Only the lower triangle is read. Real input yields real eigenvectors.
pub fn hermitian_eigen(m: &DMatrix<C64>, vectors: bool) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch("eigen-decomposition of a non-square matrix".into()));
    }
    if n == 0 {
        return Ok((vec![], DMatrix::zeros(0, 0)));
    }
    let mut a = DMatrix::from_fn(n, n, |i, j| if i >= j { m[(i, j)] } else { m[(j, i)].conj() });
    let mut q = DMatrix::<C64>::identity(n, n);
    tridiagonalise(&mut a, &mut q, vectors);
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut e = vec![0.0; n];
    // Diagonal phases make the subdiagonal real and nonnegative.
    let mut phase = c(1.0, 0.0);
    for k in 0..n - 1 {
        let sub = a[(k + 1, k)];
        let r = sub.norm();
        e[k] = r;
        if r > 0.0 {
            phase *= sub / r;
        }
        if vectors {
            for i in 0..n {
                q[(i, k + 1)] *= phase;
            }
        }
    }
    tql(&mut d, &mut e, vectors.then_some(&mut q))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].total_cmp(&d[y]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vecs = if vectors { DMatrix::from_fn(n, n, |r, k| q[(r, order[k])]) } else { DMatrix::zeros(0, 0) };
    Ok((values, vecs))
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(&m.map(|x| c(x, 0.0)), false)?.0)
}

/// Householder reduction A <- H A H, Q <- Q H, column by column.
fn tridiagonalise(a: &mut DMatrix<C64>, q: &mut DMatrix<C64>, vectors: bool) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let nx = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if x[1..].iter().all(|z| z.norm() == 0.0) || nx == 0.0 {
            continue;
        }
        let x0 = x[0];
        let ph = if x0.norm() > 0.0 { x0 / x0.norm() } else { c(1.0, 0.0) };
        let mut v = x;
        v[0] += ph * nx;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= vn;
        }
        let off = k + 1;
        // rows: A[off.., :] -= 2 v (v^dagger A[off.., :])
        for j in 0..n {
            let mut s = C64::default();
            for (t, vt) in v.iter().enumerate() {
                s += vt.conj() * a[(off + t, j)];
            }
            s *= 2.0;
            for (t, vt) in v.iter().enumerate() {
                a[(off + t, j)] -= vt * s;
            }
        }
        // columns: A[:, off..] -= 2 (A[:, off..] v) v^dagger
        let apply_right = |mat: &mut DMatrix<C64>| {
            for i in 0..n {
                let mut s = C64::default();
                for (t, vt) in v.iter().enumerate() {
                    s += mat[(i, off + t)] * vt;
                }
                s *= 2.0;
                for (t, vt) in v.iter().enumerate() {
                    mat[(i, off + t)] -= s * vt.conj();
                }
            }
        };
        apply_right(a);
        if vectors {
            apply_right(q);
        }
        for i in off + 1..n {
            a[(i, k)] = C64::default();
            a[(k, i)] = C64::default();
        }
    }
}

/// Implicit-shift QL on the real tridiagonal (d, e), e[k] = T[k+1, k].
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut DMatrix<C64>>) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m] == 0.0 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::Solver("tridiagonal QL iteration did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut cs, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = cs * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                cs = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * cs * b;
                p = s * r;
                d[i + 1] = g + p;
                g = cs * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..z.nrows() {
                        let f = z[(k, i + 1)];
                        z[(k, i + 1)] = z[(k, i)] * s + f * cs;
                        z[(k, i)] = z[(k, i)] * cs - f * s;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

impl Operator {
    pub fn new(mat: DMatrix<C64>) -> Self {
        let dims = vec![mat.nrows()];
        Self::with_flag(mat, dims)
    }

    fn with_flag(mat: DMatrix<C64>, dims: Vec<usize>) -> Self {
        let scale = max_abs(&mat).max(1.0);
        let hermitian = hermitian_deviation(&mat) <= HERMITIAN_TOL * scale;
        Operator { mat, dims, hermitian }
    }

    /// Checked constructor: rejects NaN/Inf and inconsistent dims.
    pub fn try_new(mat: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        if dims.iter().product::<usize>() != mat.nrows() || dims.iter().any(|&d| d == 0) {
            return Err(Error::DimensionMismatch(format!(
                "dims {:?} do not multiply to {} rows",
                dims,
                mat.nrows()
            )));
        }
        Ok(Self::with_flag(mat, dims))
    }

    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        Operator::try_new(self.mat, dims)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Operator::new(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Operator::new(DMatrix::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Operator::new(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_real(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let cc = rows.first().map_or(0, |x| x.len());
        Operator::from_fn(r, cc, |i, j| c(rows[i][j], 0.0))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Operator::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { C64::default() })
    }

    /// |v><v| for a (not necessarily normalised) vector.
    pub fn projector(v: &DVector<C64>) -> Self {
        Operator::new(v * v.adjoint())
    }

    /// Outer product |u><v|.
    pub fn outer(u: &DVector<C64>, v: &DVector<C64>) -> Self {
        Operator::new(u * v.adjoint())
    }

    pub fn mat(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_mat(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn cols(&self) -> usize {
        self.mat.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.mat)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    fn require_hermitian(&self) -> Result<()> {
        if self.hermitian {
            Ok(())
        } else {
            Err(Error::NotHermitian(self.hermitian_deviation()))
        }
    }

    fn keep_dims(&self, mat: DMatrix<C64>) -> Self {
        let dims = if mat.nrows() == self.rows() { self.dims.clone() } else { vec![mat.nrows()] };
        Operator::with_flag(mat, dims)
    }

    pub fn adjoint(&self) -> Self {
        self.keep_dims(self.mat.adjoint())
    }

    pub fn transpose(&self) -> Self {
        self.keep_dims(self.mat.transpose())
    }

    pub fn conj(&self) -> Self {
        self.keep_dims(self.mat.map(|z| z.conj()))
    }

    /// (X + X^dagger)/2, flagged Hermitian.
    pub fn hermitian_part(&self) -> Self {
        let m = (&self.mat + self.mat.adjoint()) * c(0.5, 0.0);
        Operator { mat: m, dims: self.dims.clone(), hermitian: true }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.keep_dims(&self.mat * c(s, 0.0))
    }

    pub fn scale_c(&self, s: C64) -> Self {
        self.keep_dims(&self.mat * s)
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// Hilbert-Schmidt inner product Tr(self^dagger other).
    pub fn inner(&self, other: &Operator) -> C64 {
        self.mat.iter().zip(other.mat.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// Real part of Tr(self^dagger other); the natural pairing for Hermitian operators.
    pub fn re_inner(&self, other: &Operator) -> f64 {
        self.inner(other).re
    }

    pub fn kron(&self, other: &Operator) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let m = self.mat.kronecker(&other.mat);
        if m.nrows() == dims.iter().product::<usize>() {
            Operator::with_flag(m, dims)
        } else {
            Operator::new(m)
        }
    }

    pub fn tensor_power(&self, n: usize) -> Self {
        assert!(n >= 1, "tensor power needs n >= 1");
        let mut out = self.clone();
        for _ in 1..n {
            out = out.kron(self);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs(&(&self.mat - &other.mat))
    }

    pub fn eigh(&self) -> Result<Eigh> {
        self.require_hermitian()?;
        // Symmetrise so that the solver sees an exactly Hermitian input.
        let m = (&self.mat + self.mat.adjoint()) * c(0.5, 0.0);
        let (values, vectors) = hermitian_eigen(&m, true)?;
        Ok(Eigh { values, vectors })
    }

    pub fn eigvalsh(&self) -> Result<Vec<f64>> {
        Ok(self.eigh()?.values)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigvalsh()?.first().copied().unwrap_or(0.0))
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.mat.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn trace_norm(&self) -> f64 {
        if self.hermitian {
            if let Ok(v) = self.eigvalsh() {
                return v.iter().map(|x| x.abs()).sum();
            }
        }
        self.singular_values().iter().sum()
    }

    pub fn op_norm(&self) -> f64 {
        if self.hermitian {
            if let Ok(v) = self.eigvalsh() {
                return v.iter().fold(0.0, |a, x| a.max(x.abs()));
            }
        }
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    pub fn hs_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn multi_index(idx: usize, dims: &[usize], out: &mut [usize]) {
        let mut r = idx;
        for k in (0..dims.len()).rev() {
            out[k] = r % dims[k];
            r /= dims[k];
        }
    }

    fn flat_index(digits: &[usize], dims: &[usize]) -> usize {
        digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
    }

    /// Partial transpose on every tensor factor whose mask entry is true.
    pub fn partial_transpose(&self, mask: &[bool]) -> Result<Self> {
        if !self.is_square() || mask.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "partial transpose mask of length {} for dims {:?}",
                mask.len(),
                self.dims
            )));
        }
        let dims = &self.dims;
        let n = self.rows();
        let k = dims.len();
        let mut ri = vec![0; k];
        let mut ci = vec![0; k];
        let mut out = DMatrix::<C64>::zeros(n, n);
        for r in 0..n {
            Self::multi_index(r, dims, &mut ri);
            for col in 0..n {
                Self::multi_index(col, dims, &mut ci);
                let mut a = ri.clone();
                let mut b = ci.clone();
                for s in 0..k {
                    if mask[s] {
                        std::mem::swap(&mut a[s], &mut b[s]);
                    }
                }
                out[(r, col)] = self.mat[(Self::flat_index(&a, dims), Self::flat_index(&b, dims))];
            }
        }
        Ok(Operator::with_flag(out, dims.clone()))
    }

    /// Partial transpose on the second factor of a bipartite operator.
    pub fn partial_transpose_b(&self) -> Result<Self> {
        if self.dims.len() != 2 {
            return Err(Error::DimensionMismatch(format!("expected bipartite dims, got {:?}", self.dims)));
        }
        self.partial_transpose(&[false, true])
    }

    /// Realignment X^R[(i,k),(j,l)] = X[(i,j),(k,l)] of a bipartite operator.
    /// The output is dA^2 x dB^2 and in general neither square nor Hermitian.
    pub fn reshuffle(&self) -> Result<Self> {
        if self.dims.len() != 2 || !self.is_square() {
            return Err(Error::DimensionMismatch(format!("expected bipartite dims, got {:?}", self.dims)));
        }
        let (da, db) = (self.dims[0], self.dims[1]);
        let mut out = DMatrix::<C64>::zeros(da * da, db * db);
        for i in 0..da {
            for j in 0..db {
                for k in 0..da {
                    for l in 0..db {
                        out[(i * da + k, j * db + l)] = self.mat[(i * db + j, k * db + l)];
                    }
                }
            }
        }
        Ok(Operator::new(out))
    }

    /// Reorder tensor factors: factor `perm[k]` of the input becomes factor k.
    pub fn permute_systems(&self, perm: &[usize]) -> Result<Self> {
        let k = self.dims.len();
        let mut seen = vec![false; k];
        if perm.len() != k || !self.is_square() || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::DimensionMismatch(format!("bad permutation {:?} for dims {:?}", perm, self.dims)));
        }
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let n = self.rows();
        let map: Vec<usize> = (0..n)
            .map(|idx| {
                let mut nd = vec![0; k];
                Self::multi_index(idx, &new_dims, &mut nd);
                let mut od = vec![0; k];
                for (s, &p) in perm.iter().enumerate() {
                    od[p] = nd[s];
                }
                Self::flat_index(&od, &self.dims)
            })
            .collect();
        let out = DMatrix::from_fn(n, n, |r, col| self.mat[(map[r], map[col])]);
        Ok(Operator::with_flag(out, new_dims))
    }

    /// Group the tensor factors into a bipartition A|B with the factors flagged
    /// in `a_mask` on the A side; the result has dims [dA, dB].
    pub fn regroup(&self, a_mask: &[bool]) -> Result<Self> {
        if a_mask.len() != self.dims.len() {
            return Err(Error::DimensionMismatch("regroup mask length".into()));
        }
        let mut perm: Vec<usize> = (0..a_mask.len()).filter(|&s| a_mask[s]).collect();
        perm.extend((0..a_mask.len()).filter(|&s| !a_mask[s]));
        let p = self.permute_systems(&perm)?;
        let da: usize = (0..a_mask.len()).filter(|&s| a_mask[s]).map(|s| self.dims[s]).product();
        let db = self.rows() / da;
        p.with_dims(vec![da, db])
    }

    /// Orthogonal projector onto the span of eigenvectors with eigenvalue above `tol`.
    pub fn support_projector(&self, tol: f64) -> Result<Self> {
        let e = self.eigh()?;
        let n = e.values.len();
        let mut p = DMatrix::<C64>::zeros(n, n);
        for (k, &v) in e.values.iter().enumerate() {
            if v > tol {
                let col = e.vectors.column(k);
                p += &col * col.adjoint();
            }
        }
        Ok(Operator { mat: p, dims: self.dims.clone(), hermitian: true })
    }

    /// Orthonormal basis (as columns) of the eigenspace with eigenvalue at most `tol`.
    pub fn kernel_basis(&self, tol: f64) -> Result<DMatrix<C64>> {
        let e = self.eigh()?;
        let cols: Vec<usize> = (0..e.values.len()).filter(|&k| e.values[k] <= tol).collect();
        let n = e.values.len();
        Ok(DMatrix::from_fn(n, cols.len(), |r, k| e.vectors[(r, cols[k])]))
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            rows: self.rows(),
            cols: self.cols(),
            dims: self.dims.clone(),
            re: (0..self.rows()).map(|i| (0..self.cols()).map(|j| self.mat[(i, j)].re).collect()).collect(),
            im: (0..self.rows()).map(|i| (0..self.cols()).map(|j| self.mat[(i, j)].im).collect()).collect(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: MatrixJson = serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("matrix json: {e}")))?;
        j.into_operator()
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Operator::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// On-disk matrix format: `{"rows","cols","dims","re":[[..]],"im":[[..]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn into_operator(self) -> Result<Operator> {
        let shape_ok = |m: &Vec<Vec<f64>>| m.len() == self.rows && m.iter().all(|r| r.len() == self.cols);
        if !shape_ok(&self.re) || (!self.im.is_empty() && !shape_ok(&self.im)) {
            return Err(Error::DimensionMismatch(format!("matrix body does not match {}x{}", self.rows, self.cols)));
        }
        let mat = DMatrix::from_fn(self.rows, self.cols, |i, j| {
            c(self.re[i][j], if self.im.is_empty() { 0.0 } else { self.im[i][j] })
        });
        let dims = if self.dims.is_empty() { vec![self.rows] } else { self.dims };
        Operator::try_new(mat, dims)
    }
}

/// Schmidt coefficients (singular values of the dA x dB coefficient matrix), descending.
pub fn schmidt_coefficients(psi: &DVector<C64>, da: usize, db: usize) -> Result<Vec<f64>> {
    if psi.len() != da * db {
        return Err(Error::DimensionMismatch(format!("vector of length {} is not {}x{}", psi.len(), da, db)));
    }
    let m = DMatrix::from_fn(da, db, |i, j| psi[i * db + j]);
    Ok(Operator::new(m).singular_values())
}

/// Dominant eigenvector of a pure-state density matrix, if it is (numerically) rank one.
pub fn pure_state_vector(rho: &Operator, tol: f64) -> Option<DVector<C64>> {
    let e = rho.eigh().ok()?;
    let n = e.values.len();
    let top = e.values[n - 1];
    if (top - 1.0).abs() > tol || e.values[..n - 1].iter().any(|v| v.abs() > tol) {
        return None;
    }
    Some(e.vectors.column(n - 1).into_owned())
}

pub fn ket(amps: &[C64]) -> DVector<C64> {
    DVector::from_column_slice(amps)
}

pub fn normalize(v: &DVector<C64>) -> DVector<C64> {
    let n = v.norm();
    v / c(n, 0.0)
}

impl Add<&Operator> for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.keep_dims(&self.mat + &rhs.mat)
    }
}

impl Sub<&Operator> for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.keep_dims(&self.mat - &rhs.mat)
    }
}

impl Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        let m = &self.mat * &rhs.mat;
        if self.is_square() && rhs.is_square() {
            self.keep_dims(m)
        } else {
            Operator::new(m)
        }
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-1.0)
    }
}

/// Hermitian matrix with independent standard normal real and imaginary parts.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Operator {
    let g = DMatrix::from_fn(d, d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    Operator::new((&g + g.adjoint()).scale(0.5))
}

/// Unit vector with normal complex amplitudes, which is Haar distributed.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<C64> {
    let v = DVector::from_fn(d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    normalize(&v)
}

/// Density operator G G^dagger / Tr with G a d x k Gaussian matrix; k = d gives the Hilbert-Schmidt measure.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, k: usize) -> Operator {
    let g = DMatrix::from_fn(d, k.max(1), |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    Operator::new(m.unscale(tr)).hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_structured_projectors() {
        for d in [2usize, 4, 8, 16] {
            let mut v = DVector::zeros(d * d);
            for i in 0..d {
                v[i * d + i] = c(1.0 / (d as f64).sqrt(), 0.0);
            }
            let e = Operator::projector(&v).eigh().unwrap();
            assert!(e.values[0].abs() < 1e-12 && (e.values[d * d - 1] - 1.0).abs() < 1e-12);
            assert!((e.reconstruct() - Operator::projector(&v).mat()).norm() < 1e-12);
        }
    }

    #[test]
    fn eigen_complex_reconstruction() {
        let m = Operator::from_fn(7, 7, |i, j| c(((3 * i + 5 * j) % 7) as f64 - 3.0, ((i * j) % 5) as f64 - 2.0)).hermitian_part();
        let e = m.eigh().unwrap();
        assert!((e.reconstruct() - m.mat()).norm() < 1e-12);
        let u = &e.vectors;
        assert!((u.adjoint() * u - DMatrix::<C64>::identity(7, 7)).norm() < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    fn pauli_y() -> Operator {
        Operator::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => C64::default(),
        })
    }

    #[test]
    fn eigh_sorted_ascending() {
        let e = pauli_y().eigh().unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn partial_transpose_of_bell_is_half_swap() {
        let mut v = DVector::<C64>::zeros(4);
        v[0] = c(1.0, 0.0);
        v[3] = c(1.0, 0.0);
        let phi = Operator::projector(&v).scale(0.5).with_dims(vec![2, 2]).unwrap();
        let pt = phi.partial_transpose_b().unwrap();
        assert!((pt.get(1, 2).re - 0.5).abs() < 1e-15);
        assert!((pt.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((pt.trace_norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reshuffle_shape() {
        let x = Operator::identity(6).with_dims(vec![2, 3]).unwrap();
        let r = x.reshuffle().unwrap();
        assert_eq!((r.rows(), r.cols()), (4, 9));
        // identity realigns to |vec I_A><vec I_B|, rank one with norm sqrt(2*3)
        assert!((r.trace_norm() - 6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn json_rejects_nan() {
        let s = r#"{"rows":1,"cols":1,"re":[[NaN]],"im":[[0]]}"#;
        assert!(Operator::from_json_str(s).is_err());
        let s = r#"{"rows":1,"cols":1,"re":[[1e400]],"im":[[0]]}"#;
        assert!(Operator::from_json_str(s).is_err());
    }

    #[test]
    fn json_round_trip() {
        let y = pauli_y();
        let s = serde_json::to_string(&y.to_json()).unwrap();
        let back = Operator::from_json_str(&s).unwrap();
        assert!(back.max_abs_diff(&y) == 0.0);
        assert!(back.is_hermitian());
    }

    #[test]
    fn regroup_two_copies() {
        let a = Operator::from_fn(4, 4, |i, j| c((i * 4 + j) as f64, 0.0)).with_dims(vec![2, 2]).unwrap();
        let two = a.kron(&a);
        let g = two.regroup(&[true, false, true, false]).unwrap();
        assert_eq!(g.dims(), &[4, 4]);
        // trace is invariant under the permutation
        assert!((g.trace() - two.trace()).norm() < 1e-12);
    }
}
