//! Real symmetric tridiagonal matrices with a Sturm-sequence eigensolver.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symmetric tridiagonal matrix: `diag` (length n) and `offdiag` (length n−1).
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix<T: Real> {
    diag: Vec<T>,
    offdiag: Vec<T>,
}

impl<T: Real> TridiagonalMatrix<T> {
    pub fn new(diag: Vec<T>, offdiag: Vec<T>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::Shape(format!(
                "tridiagonal matrix needs n >= 1 diagonal and n-1 off-diagonal entries, got {} and {}",
                diag.len(),
                offdiag.len()
            )));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[T] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[T] {
        &self.offdiag
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &e) in self.offdiag.iter().enumerate() {
            m[(i, i + 1)] = e;
            m[(i + 1, i)] = e;
        }
        m
    }

    /// `Σ_{m≠n} |T_mn|² = 2 Σ e_i²`.
    pub fn offdiag_norm_sq(&self) -> T {
        T::lit(2.0) * self.offdiag.iter().fold(T::zero(), |a, &e| a + e * e)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: T) -> usize {
        let tiny = T::default_epsilon() * self.scale();
        let mut count = 0;
        let mut q = T::one();
        for i in 0..self.n() {
            let coupling = if i == 0 {
                T::zero()
            } else {
                self.offdiag[i - 1] * self.offdiag[i - 1] / q
            };
            q = self.diag[i] - x - coupling;
            if q == T::zero() {
                q = -tiny;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    fn scale(&self) -> T {
        let d = self.diag.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let e = self.offdiag.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        (d + e + e).max(T::default_epsilon())
    }

    fn gershgorin(&self) -> (T, T) {
        let n = self.n();
        let mut lo = self.diag[0];
        let mut hi = self.diag[0];
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { T::zero() };
            let right = if i + 1 < n { self.offdiag[i].abs() } else { T::zero() };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue by bisection, to a few ulps of the matrix scale.
    pub fn eigenvalue(&self, k: usize) -> Result<T> {
        if k >= self.n() {
            return Err(Error::InvalidArgument(format!("eigenvalue index {k} out of range")));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let slack = T::lit(4.0) * T::default_epsilon() * self.scale();
        lo -= slack;
        hi += slack;
        for _ in 0..256 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((lo + hi) * T::lit(0.5))
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        (0..self.n())
            .map(|k| self.eigenvalue(k).expect("index in range"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_closed_form() {
        let t = TridiagonalMatrix::new(vec![1.0, -0.5], vec![0.7]).unwrap();
        let mean = 0.25;
        let rad = (0.75f64 * 0.75 + 0.49).sqrt();
        let ev = t.eigenvalues();
        assert!((ev[0] - (mean - rad)).abs() < 1e-14);
        assert!((ev[1] - (mean + rad)).abs() < 1e-14);
    }

    #[test]
    fn decoupled_sites_return_sorted_diagonal() {
        let t = TridiagonalMatrix::new(vec![3.0, -1.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(t.sturm_count(0.0), 1);
        let ev = t.eigenvalues();
        for (a, b) in ev.iter().zip([-1.0f64, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn shape_is_checked() {
        assert!(TridiagonalMatrix::new(vec![1.0, 2.0], vec![]).is_err());
    }
}
