//! Small dense linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex;

use crate::scalar::{c, cis, Real};

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Eigendecomposition of a Hermitian matrix with eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh<T: Real> {
    pub values: Vec<T>,
    /// Column `n` is the eigenvector of `values[n]`.
    pub vectors: CMatrix<T>,
}

impl<T: Real> Eigh<T> {
    pub fn vector(&self, n: usize) -> CVector<T> {
        self.vectors.column(n).into_owned()
    }

    /// Smallest adjacent gap and the lower index of that pair.
    pub fn min_gap(&self) -> Option<(usize, T)> {
        self.values
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i, w[1] - w[0]))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    }
}

/// Eigendecomposition of a Hermitian matrix; the caller guarantees hermiticity.
pub fn eigh<T: Real>(m: &CMatrix<T>) -> Eigh<T> {
    let n = m.nrows();
    let se = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Eigh { values, vectors }
}

/// `exp(-i H tau)` for Hermitian `H`.
///
/// 2x2 uses the closed Pauli form; larger matrices go through [`eigh`].
pub fn unitary_step<T: Real>(h: &CMatrix<T>, tau: T) -> CMatrix<T> {
    if h.nrows() == 2 {
        return pauli_exponential(h, tau);
    }
    let e = eigh(h);
    let n = h.nrows();
    let mut scaled = e.vectors.clone();
    for (j, &lambda) in e.values.iter().enumerate() {
        let phase = cis(-lambda * tau);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * e.vectors.adjoint()
}

fn pauli_exponential<T: Real>(h: &CMatrix<T>, tau: T) -> CMatrix<T> {
    let half = T::lit(0.5);
    let a0 = (h[(0, 0)].re + h[(1, 1)].re) * half;
    let az = (h[(0, 0)].re - h[(1, 1)].re) * half;
    let ax = h[(1, 0)].re;
    let ay = h[(1, 0)].im;
    let norm = (ax * ax + ay * ay + az * az).sqrt();
    let angle = norm * tau;
    let cos = angle.cos();
    // sin(|a| tau)/|a|, continuous at |a| = 0
    let sinc = if norm > T::zero() {
        angle.sin() / norm
    } else {
        tau
    };
    let i = Complex::new(T::zero(), T::one());
    let global = cis(-a0 * tau);
    let m00 = c(cos) - i * c(sinc * az);
    let m11 = c(cos) + i * c(sinc * az);
    // -i sinc (ax sx + ay sy): off-diagonals -i sinc (ax -/+ i ay)
    let m01 = -i * Complex::new(sinc * ax, -sinc * ay);
    let m10 = -i * Complex::new(sinc * ax, sinc * ay);
    DMatrix::from_row_slice(2, 2, &[m00 * global, m01 * global, m10 * global, m11 * global])
}

/// Minimum-norm least-squares solution of `a x = rhs` via SVD.
///
/// Returns the solution and the numerical rank (singular values above
/// `rcond * s_max`).
pub fn min_norm_lstsq<T: Real>(a: &DMatrix<T>, rhs: &DVector<T>, rcond: T) -> (DVector<T>, usize) {
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd
        .singular_values
        .iter()
        .fold(T::zero(), |m, &s| if s > m { s } else { m });
    let cutoff = smax * rcond;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if smax == T::zero() {
        return (DVector::zeros(a.ncols()), 0);
    }
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut x = DVector::zeros(a.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            continue;
        }
        let coef = u.column(k).dot(rhs) / s;
        x += vt.row(k).transpose() * coef;
    }
    (x, rank)
}

/// Orthogonal projector onto the null space of `a` (numerical rank cutoff `rcond`).
pub fn null_space_projector<T: Real>(a: &DMatrix<T>, rcond: T) -> DMatrix<T> {
    let n = a.ncols();
    let svd = SVD::new(a.clone(), false, true);
    let smax = svd
        .singular_values
        .iter()
        .fold(T::zero(), |m, &s| if s > m { s } else { m });
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut range = DMatrix::zeros(n, n);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if smax > T::zero() && s > smax * rcond {
            let v = vt.row(k).transpose();
            range += &v * v.transpose();
        }
    }
    DMatrix::identity(n, n) - range
}

pub(crate) fn commutator_raw<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

pub(crate) fn frobenius<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// `Tr(a b)` without forming the product.
pub(crate) fn trace_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Complex<T> {
    let n = a.nrows();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub(crate) fn inner<T: Real>(a: &CVector<T>, b: &CVector<T>) -> Complex<T> {
    a.iter()
        .zip(b.iter())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm(rows: &[[(f64, f64); 3]; 3]) -> CMatrix<f64> {
        let mut m = CMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = Complex::new(rows[i][j].0, rows[i][j].1);
            }
        }
        m
    }

    #[test]
    fn eigh_sorts_ascending_and_reconstructs() {
        let m = herm(&[
            [(2.0, 0.0), (0.5, -0.3), (0.0, 0.1)],
            [(0.5, 0.3), (-1.0, 0.0), (0.2, 0.0)],
            [(0.0, -0.1), (0.2, 0.0), (0.5, 0.0)],
        ]);
        let e = eigh(&m);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let mut diag = CMatrix::zeros(3, 3);
        for i in 0..3 {
            diag[(i, i)] = c(e.values[i]);
        }
        let back = &e.vectors * diag * e.vectors.adjoint();
        assert!(frobenius(&(back - m)) < 1e-12);
    }

    #[test]
    fn pauli_exponential_matches_eigen_route() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(0.3, 0.0),
                Complex::new(0.7, -0.4),
                Complex::new(0.7, 0.4),
                Complex::new(-1.1, 0.0),
            ],
        );
        let closed = pauli_exponential(&m, 0.37);
        let e = eigh(&m);
        let mut d = CMatrix::zeros(2, 2);
        for i in 0..2 {
            d[(i, i)] = cis(-e.values[i] * 0.37);
        }
        let spectral = &e.vectors * d * e.vectors.adjoint();
        assert!(frobenius(&(closed - spectral)) < 1e-14);
    }

    #[test]
    fn lstsq_returns_min_norm_solution() {
        // rank one: x + y = 2 has min-norm solution (1, 1)
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let rhs = DVector::from_vec(vec![2.0, 2.0]);
        let (x, rank): (DVector<f64>, usize) = min_norm_lstsq(&a, &rhs, 1e-12);
        assert_eq!(rank, 1);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        let p: DMatrix<f64> = null_space_projector(&a, 1e-12);
        assert!((p[(0, 0)] - 0.5).abs() < 1e-12 && (p[(0, 1)] + 0.5).abs() < 1e-12);
    }
}
