//! Hermitian operators on a finite Hilbert space, trace-orthonormal bases and
//! their structure constants.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Eigh};
use crate::scalar::{c, imag_unit, modulus, Real};

/// Relative hermiticity tolerance (against the largest entry magnitude).
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Orthonormality tolerance for `(1/N) Tr(X_mu X_nu)`.
pub const ORTHONORMALITY_TOL: f64 = 1e-12;
/// Antisymmetry tolerance for computed structure constants.
pub const ANTISYMMETRY_TOL: f64 = 1e-10;
/// Entries with `|f| <=` this are dropped from sparse storage.
pub const STRUCTURE_PRUNE: f64 = 1e-14;

/// Dense Hermitian matrix of dimension `>= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator<T: Real> {
    mat: CMatrix<T>,
}

impl<T: Real> HermitianOperator<T> {
    /// Validates shape and hermiticity; the input is never symmetrized.
    pub fn new(mat: CMatrix<T>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Shape(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.nrows() < 2 {
            return Err(Error::Shape(format!("dimension must be >= 2, got {}", mat.nrows())));
        }
        let n = mat.nrows();
        let scale = mat.iter().fold(T::zero(), |m, z| {
            let a = modulus(*z);
            if a > m {
                a
            } else {
                m
            }
        });
        let mut deviation = T::zero();
        for i in 0..n {
            for j in i..n {
                let d = modulus(mat[(i, j)] - mat[(j, i)].conj());
                if d > deviation {
                    deviation = d;
                }
            }
        }
        let tolerance = T::lit(HERMITICITY_TOL) * scale;
        if deviation > tolerance {
            return Err(Error::NotHermitian {
                deviation: deviation.as_f64(),
                tolerance: tolerance.as_f64(),
            });
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix that is Hermitian by construction.
    pub(crate) fn from_matrix_unchecked(mat: CMatrix<T>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    pub fn from_real(mat: DMatrix<T>) -> Result<Self> {
        Self::new(mat.map(c))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix_unchecked(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix_unchecked(CMatrix::identity(dim, dim))
    }

    pub fn diagonal(values: &[T]) -> Result<Self> {
        let n = values.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = c(v);
        }
        Self::new(m)
    }

    pub fn pauli_x() -> Self {
        let (o, l) = (T::zero(), T::one());
        Self::from_matrix_unchecked(CMatrix::from_row_slice(
            2,
            2,
            &[c(o), c(l), c(l), c(o)],
        ))
    }

    pub fn pauli_y() -> Self {
        let o = Complex::new(T::zero(), T::zero());
        let i = imag_unit::<T>();
        Self::from_matrix_unchecked(CMatrix::from_row_slice(2, 2, &[o, -i, i, o]))
    }

    pub fn pauli_z() -> Self {
        let (o, l) = (T::zero(), T::one());
        Self::from_matrix_unchecked(CMatrix::from_row_slice(
            2,
            2,
            &[c(l), c(o), c(o), c(-l)],
        ))
    }

    /// `(v . sigma)` for a real 3-vector.
    pub fn bloch(v: [T; 3]) -> Self {
        Self::pauli_x() * v[0] + Self::pauli_y() * v[1] + Self::pauli_z() * v[2]
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.mat
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_matrix_unchecked(self.mat.map(|z| z * s))
    }

    /// Sum of `coeffs[k] * ops[k]`.
    pub fn combine(coeffs: &[T], ops: &[Self]) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::Shape("empty operator list".into()))?;
        if coeffs.len() != ops.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for {} operators",
                coeffs.len(),
                ops.len()
            )));
        }
        let mut acc = CMatrix::zeros(first.dim(), first.dim());
        for (&w, op) in coeffs.iter().zip(ops) {
            if op.dim() != first.dim() {
                return Err(Error::Shape("operators of different dimensions".into()));
            }
            acc += op.mat.map(|z| z * w);
        }
        Ok(Self::from_matrix_unchecked(acc))
    }

    pub fn hs_norm(&self) -> T {
        hs_norm(self)
    }

    /// Matrix of diagonal entries only.
    pub fn diagonal_part(&self) -> Self {
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(self.mat[(i, i)].re);
        }
        Self::from_matrix_unchecked(m)
    }

    /// `sum_{m != n} |H_mn|^2`.
    pub fn offdiag_norm_sq(&self) -> T {
        let n = self.dim();
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += self.mat[(i, j)].norm_sqr();
                }
            }
        }
        acc
    }

    pub fn eigh(&self) -> Eigh<T> {
        linalg::eigh(&self.mat)
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.eigh().values
    }

    /// `(1/N) Re Tr(self * other)`.
    pub fn normalized_overlap(&self, other: &Self) -> T {
        linalg::trace_product(&self.mat, &other.mat).re / T::count(self.dim())
    }
}

impl<T: Real> std::ops::Add for HermitianOperator<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_matrix_unchecked(self.mat + rhs.mat)
    }
}

impl<T: Real> std::ops::Sub for HermitianOperator<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_matrix_unchecked(self.mat - rhs.mat)
    }
}

impl<T: Real> std::ops::Mul<T> for HermitianOperator<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        Self::from_matrix_unchecked(self.mat.map(|z| z * rhs))
    }
}

/// Result of `a b - b a` for Hermitian `a`, `b`: an anti-Hermitian matrix `C`
/// which is carried together with its Hermitian factor `K`, `C = i K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Commutator<T: Real> {
    raw: CMatrix<T>,
}

impl<T: Real> Commutator<T> {
    /// The anti-Hermitian matrix `a b - b a`.
    pub fn matrix(&self) -> &CMatrix<T> {
        &self.raw
    }

    /// `K = -i (a b - b a)`, so that `[a, b] = i K`.
    pub fn hermitian_part(&self) -> HermitianOperator<T> {
        let minus_i = -imag_unit::<T>();
        HermitianOperator::from_matrix_unchecked(self.raw.map(|z| z * minus_i))
    }

    pub fn hs_norm(&self) -> T {
        linalg::frobenius(&self.raw)
    }
}

pub fn commutator<T: Real>(a: &HermitianOperator<T>, b: &HermitianOperator<T>) -> Result<Commutator<T>> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "commutator of {}- and {}-dimensional operators",
            a.dim(),
            b.dim()
        )));
    }
    Ok(Commutator {
        raw: linalg::commutator_raw(&a.mat, &b.mat),
    })
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm<T: Real>(op: &HermitianOperator<T>) -> T {
    linalg::frobenius(&op.mat)
}

/// Ordered set of Hermitian operators with `(1/N) Tr(X_mu X_nu) = delta_mu_nu`.
#[derive(Debug, Clone)]
pub struct BasisSet<T: Real> {
    dim: usize,
    operators: Vec<HermitianOperator<T>>,
    labels: Vec<String>,
}

impl<T: Real> BasisSet<T> {
    pub fn new(operators: Vec<HermitianOperator<T>>, labels: Vec<String>) -> Result<Self> {
        let dim = operators
            .first()
            .map(HermitianOperator::dim)
            .ok_or_else(|| Error::Shape("basis must contain at least one operator".into()))?;
        if labels.len() != operators.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} operators",
                labels.len(),
                operators.len()
            )));
        }
        if operators.len() > dim * dim {
            return Err(Error::Shape(format!(
                "{} operators exceed dim^2 = {}",
                operators.len(),
                dim * dim
            )));
        }
        if let Some(op) = operators.iter().find(|op| op.dim() != dim) {
            return Err(Error::Shape(format!(
                "basis mixes dimensions {dim} and {}",
                op.dim()
            )));
        }
        let tol = T::tol(ORTHONORMALITY_TOL);
        for (a, xa) in operators.iter().enumerate() {
            for (b, xb) in operators.iter().enumerate().skip(a) {
                let overlap = xa.normalized_overlap(xb);
                let target = if a == b { T::one() } else { T::zero() };
                if (overlap - target).abs() > tol {
                    return Err(Error::NonOrthonormal {
                        first: a,
                        second: b,
                        overlap: overlap.as_f64(),
                    });
                }
            }
        }
        Ok(Self {
            dim,
            operators,
            labels,
        })
    }

    /// `{sigma_x, sigma_y, sigma_z}`.
    pub fn pauli() -> Self {
        Self {
            dim: 2,
            operators: vec![
                HermitianOperator::pauli_x(),
                HermitianOperator::pauli_y(),
                HermitianOperator::pauli_z(),
            ],
            labels: vec!["sx".into(), "sy".into(), "sz".into()],
        }
    }

    /// `{1, sigma_x, sigma_y, sigma_z}`.
    pub fn pauli_with_identity() -> Self {
        let mut b = Self::pauli();
        b.operators.insert(0, HermitianOperator::identity(2));
        b.labels.insert(0, "id".into());
        b
    }

    /// Generalized Gell-Mann matrices scaled to `(1/N) Tr(X X) = 1`
    /// (`N^2 - 1` traceless operators). For `N = 2` these are the Pauli matrices.
    pub fn gell_mann(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Shape(format!("dimension must be >= 2, got {dim}")));
        }
        // standard normalization Tr(l l) = 2, rescale by sqrt(N/2)
        let s = (T::count(dim) / T::lit(2.0)).sqrt();
        let mut ops = Vec::with_capacity(dim * dim - 1);
        let mut labels = Vec::with_capacity(dim * dim - 1);
        for j in 0..dim {
            for k in (j + 1)..dim {
                let mut sym = CMatrix::zeros(dim, dim);
                sym[(j, k)] = c(s);
                sym[(k, j)] = c(s);
                ops.push(HermitianOperator::from_matrix_unchecked(sym));
                labels.push(format!("sym{j}{k}"));
                let mut anti = CMatrix::zeros(dim, dim);
                anti[(j, k)] = Complex::new(T::zero(), -s);
                anti[(k, j)] = Complex::new(T::zero(), s);
                ops.push(HermitianOperator::from_matrix_unchecked(anti));
                labels.push(format!("asym{j}{k}"));
            }
        }
        ops.extend(Self::diagonal_gell_mann(dim));
        labels.extend((1..dim).map(|l| format!("diag{l}")));
        Self::new(ops, labels)
    }

    /// Only the `N - 1` diagonal Gell-Mann operators (a commuting set).
    pub fn diagonal(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Shape(format!("dimension must be >= 2, got {dim}")));
        }
        let ops = Self::diagonal_gell_mann(dim);
        let labels = (1..dim).map(|l| format!("diag{l}")).collect();
        Self::new(ops, labels)
    }

    /// Identity plus all Gell-Mann operators: a complete basis of `N^2` elements.
    pub fn complete(dim: usize) -> Result<Self> {
        let gm = Self::gell_mann(dim)?;
        let mut ops = vec![HermitianOperator::identity(dim)];
        let mut labels = vec!["id".to_string()];
        ops.extend(gm.operators);
        labels.extend(gm.labels);
        Self::new(ops, labels)
    }

    fn diagonal_gell_mann(dim: usize) -> Vec<HermitianOperator<T>> {
        let s = (T::count(dim) / T::lit(2.0)).sqrt();
        (1..dim)
            .map(|l| {
                let lf = T::count(l);
                let norm = (T::lit(2.0) / (lf * (lf + T::one()))).sqrt() * s;
                let mut m = CMatrix::zeros(dim, dim);
                for i in 0..l {
                    m[(i, i)] = c(norm);
                }
                m[(l, l)] = c(-lf * norm);
                HermitianOperator::from_matrix_unchecked(m)
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operators(&self) -> &[HermitianOperator<T>] {
        &self.operators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `sum_mu coeffs[mu] X_mu`.
    pub fn reconstruct(&self, coeffs: &[T]) -> Result<HermitianOperator<T>> {
        HermitianOperator::combine(coeffs, &self.operators)
    }
}

/// Coefficients of an operator in a basis together with the part the basis
/// cannot represent.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion<T: Real> {
    pub coeffs: Vec<T>,
    /// `|| op - sum c_mu X_mu ||_HS`.
    pub residual: T,
}

/// `c_mu = (1/N) Tr(op X_mu)`.
pub fn expand<T: Real>(op: &HermitianOperator<T>, basis: &BasisSet<T>) -> Result<Expansion<T>> {
    if op.dim() != basis.dim() {
        return Err(Error::Shape(format!(
            "operator dimension {} does not match basis dimension {}",
            op.dim(),
            basis.dim()
        )));
    }
    let coeffs: Vec<T> = basis
        .operators
        .iter()
        .map(|x| op.normalized_overlap(x))
        .collect();
    let residual = (op.clone() - basis.reconstruct(&coeffs)?).hs_norm();
    Ok(Expansion { coeffs, residual })
}

/// Sparse, totally antisymmetric `f_{mu nu lambda}` with
/// `[X_mu, X_nu] = i sum_lambda f_{mu nu lambda} X_lambda`.
#[derive(Debug, Clone)]
pub struct StructureConstants<T: Real> {
    len: usize,
    /// Every nonzero entry including all permutation images, sorted.
    entries: Vec<(usize, usize, usize, T)>,
    index: HashMap<(usize, usize, usize), T>,
    closure_residual: T,
}

impl<T: Real> StructureConstants<T> {
    /// Number of basis elements `K`; indices run over `0..K`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, mu: usize, nu: usize, lambda: usize) -> T {
        self.index.get(&(mu, nu, lambda)).copied().unwrap_or_else(T::zero)
    }

    /// Nonzero entries `(mu, nu, lambda, f)`.
    pub fn entries(&self) -> &[(usize, usize, usize, T)] {
        &self.entries
    }

    /// `max_{mu<nu} || [X_mu, X_nu] - i sum_lambda f X_lambda ||_HS`; zero when
    /// the basis closes under commutation.
    pub fn closure_residual(&self) -> T {
        self.closure_residual
    }

    /// Dense `K x K x K` copy, indexed `[mu][nu][lambda]`.
    pub fn to_dense(&self) -> Vec<Vec<Vec<T>>> {
        let mut d = vec![vec![vec![T::zero(); self.len]; self.len]; self.len];
        for &(a, b, l, v) in &self.entries {
            d[a][b][l] = v;
        }
        d
    }
}

/// `f_{mu nu lambda} = (1/(i N)) Tr([X_mu, X_nu] X_lambda)`.
pub fn structure_constants<T: Real>(basis: &BasisSet<T>) -> Result<StructureConstants<T>> {
    let k = basis.len();
    let n = T::count(basis.dim());
    let ops = basis.operators();
    // Raw values for mu < nu, every lambda.
    let mut raw: HashMap<(usize, usize, usize), T> = HashMap::new();
    let mut comms = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for mu in 0..k {
        for nu in (mu + 1)..k {
            let cm = linalg::commutator_raw(ops[mu].matrix(), ops[nu].matrix());
            for (lambda, x) in ops.iter().enumerate() {
                let tr = linalg::trace_product(&cm, x.matrix());
                raw.insert((mu, nu, lambda), tr.im / n);
            }
            comms.push(((mu, nu), cm));
        }
    }
    let lookup = |a: usize, b: usize, l: usize| -> T {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => raw[&(a, b, l)],
            std::cmp::Ordering::Greater => -raw[&(b, a, l)],
            std::cmp::Ordering::Equal => T::zero(),
        }
    };
    let tol = T::tol(ANTISYMMETRY_TOL);
    for (&(mu, nu, lambda), &v) in &raw {
        // cyclic image and the repeated-index zeros
        let cyc = lookup(nu, lambda, mu);
        let dev = (v - cyc).abs();
        let rep = if lambda == mu || lambda == nu { v.abs() } else { T::zero() };
        let worst = if dev > rep { dev } else { rep };
        if worst > tol {
            return Err(Error::NotAntisymmetric {
                mu,
                nu,
                lambda,
                deviation: worst.as_f64(),
            });
        }
    }
    let prune = T::tol(STRUCTURE_PRUNE);
    let mut entries = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            for l in (b + 1)..k {
                let v = raw[&(a, b, l)];
                if v.abs() <= prune {
                    continue;
                }
                for (p, sign) in [
                    ((a, b, l), T::one()),
                    ((b, l, a), T::one()),
                    ((l, a, b), T::one()),
                    ((b, a, l), -T::one()),
                    ((a, l, b), -T::one()),
                    ((l, b, a), -T::one()),
                ] {
                    entries.push((p.0, p.1, p.2, v * sign));
                }
            }
        }
    }
    entries.sort_by_key(|x| (x.0, x.1, x.2));
    let index = entries.iter().map(|&(a, b, l, v)| ((a, b, l), v)).collect();

    let i = imag_unit::<T>();
    let mut closure = T::zero();
    for ((mu, nu), cm) in comms {
        let mut rebuilt = CMatrix::zeros(basis.dim(), basis.dim());
        for (lambda, x) in ops.iter().enumerate() {
            let f = lookup(mu, nu, lambda);
            if f != T::zero() {
                rebuilt += x.matrix().map(|z| z * i * f);
            }
        }
        let r = linalg::frobenius(&(cm - rebuilt));
        if r > closure {
            closure = r;
        }
    }
    Ok(StructureConstants {
        len: k,
        entries,
        index,
        closure_residual: closure,
    })
}
