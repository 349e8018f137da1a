//! Seeded random inputs for the flow experiments (ChaCha8, platform independent).

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sta_core::Operator;

/// Hermitian `n×n`: diagonal `U(−2, 2)`, off-diagonal real and imaginary parts `U(−1, 1)`.
pub fn random_hermitian(seed: u64, n: usize) -> Operator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex::new(rng.random_range(-2.0..2.0), 0.0);
        for j in i + 1..n {
            let z = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    Operator::new(m).expect("Hermitian by construction")
}

/// Open Toda chain: `J ∈ (0, 1)` on `n − 1` bonds, `h ∈ (−1, 1)` on `n` sites.
pub fn random_chain(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = (0..n - 1).map(|_| rng.random_range(0.0..1.0)).collect();
    let h = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (j, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_matrix() {
        assert_eq!(random_hermitian(4, 5), random_hermitian(4, 5));
        assert_ne!(random_hermitian(4, 5), random_hermitian(5, 5));
        let (j, h) = random_chain(9, 6);
        assert_eq!((j.len(), h.len()), (5, 6));
        assert!(j.iter().all(|v| (0.0..1.0).contains(v)));
    }
}
