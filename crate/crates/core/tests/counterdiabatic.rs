use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sta_core::counterdiabatic::*;
use sta_core::error::Result;
use sta_core::operator::{BasisSet, HermitianOperator};
use sta_core::propagator::TimeGrid;
use sta_core::two_level::{threshold_field, ThetaPolynomial};

const FIELD: f64 = 1.7;

fn theta(t: f64) -> (f64, f64) {
    (0.4 + 0.9 * t - 0.3 * t * t, 0.9 - 0.6 * t)
}

/// `(h/2)(cos θ σz + sin θ σx)`.
fn rotating(t: f64) -> Result<HermitianOperator<f64>> {
    let (th, _) = theta(t);
    Ok(HermitianOperator::bloch([th.sin(), 0.0, th.cos()]).scale(FIELD / 2.0))
}

fn exact_cd(t: f64) -> Result<HermitianOperator<f64>> {
    Ok(HermitianOperator::pauli_y().scale(theta(t).1 / 2.0))
}

#[test]
fn rotating_two_level_term_is_half_rate_sigma_y() {
    for t in [0.0, 0.35, 1.2] {
        let h1 = cd_term(&rotating, t, 1e-5).unwrap();
        let want = exact_cd(t).unwrap();
        assert!((h1.matrix() - want.matrix()).norm() < 1e-8);
        assert!(h01_residual(&rotating, &exact_cd, t, 1e-5).unwrap() < 1e-6);
    }
}

#[test]
fn h01_residual_is_second_order_in_the_step() {
    let r = |dt: f64| h01_residual(&rotating, &exact_cd, 0.6, dt).unwrap();
    let ratio = r(2e-2) / r(1e-2);
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn static_pair_has_zero_residual() {
    let h0 = |_t: f64| Ok(HermitianOperator::pauli_z());
    let zero = |_t: f64| Ok(HermitianOperator::zeros(2));
    assert_eq!(h01_residual(&h0, &zero, 0.3, 1e-3).unwrap(), 0.0);
}

#[test]
fn variational_fit_over_pauli_basis() {
    let t = 0.8;
    let fit = variational_cd(&rotating, &BasisSet::pauli(), t, 1e-5, Objective::Inner).unwrap();
    let want = theta(t).1 / 2.0;
    assert!((fit.coeffs[1] - want).abs() < 1e-8, "{:?}", fit.coeffs);
    assert!(fit.coeffs[0].abs() < 1e-8 && fit.coeffs[2].abs() < 1e-8);
    assert!(fit.objective < 1e-8 && fit.h01_residual < 1e-6);
    // The component along H0 itself drops out of [H1, H0].
    assert_eq!(fit.rank, 2);
    assert_eq!(fit.warnings.len(), 1);

    let lhs = variational_cd(&rotating, &BasisSet::pauli(), t, 1e-5, Objective::Commutator).unwrap();
    assert!((lhs.coeffs[1] - want).abs() < 1e-8);
}

#[test]
fn single_operator_ansatz() {
    let t = 0.25;
    let y = BasisSet::new(vec![HermitianOperator::pauli_y()], vec!["y".into()]).unwrap();
    let fit = variational_cd(&rotating, &y, t, 1e-5, Objective::Inner).unwrap();
    assert!((fit.coeffs[0] - theta(t).1 / 2.0).abs() < 1e-8);
    assert!(fit.warnings.is_empty());

    // [σz, H0] ∝ iσy is HS-orthogonal to i dH0/dt, so nothing is gained.
    let z = BasisSet::new(vec![HermitianOperator::pauli_z()], vec!["z".into()]).unwrap();
    let fit = variational_cd(&rotating, &z, t, 1e-5, Objective::Inner).unwrap();
    assert!(fit.coeffs[0].abs() < 1e-10);
    let rate = FIELD / 2.0 * theta(t).1;
    // ‖i dH0/dt‖_HS = rate · ‖n'·σ‖_HS = rate·√2.
    assert!((fit.objective - rate * 2f64.sqrt()).abs() < 1e-8);
}

fn drifting_three_level(t: f64) -> Result<HermitianOperator<f64>> {
    let mut m = DMatrix::<Complex<f64>>::zeros(3, 3);
    m[(0, 0)] = Complex::new(-1.0 + 0.3 * t, 0.0);
    m[(1, 1)] = Complex::new(0.2 * t * t, 0.0);
    m[(2, 2)] = Complex::new(1.5 - 0.1 * t, 0.0);
    let a = Complex::new(0.4 * t.cos(), 0.2 * t);
    let b = Complex::new(0.1, -0.3 * t.sin());
    m[(0, 1)] = a;
    m[(1, 0)] = a.conj();
    m[(1, 2)] = b;
    m[(2, 1)] = b.conj();
    HermitianOperator::new(m)
}

#[test]
fn full_basis_leaves_only_the_diagonal_part() {
    let (t, dt) = (0.7, 1e-5);
    let fit = variational_cd(&drifting_three_level, &BasisSet::complete(3).unwrap(), t, dt, Objective::Inner).unwrap();
    assert!(fit.h01_residual < 1e-6, "{}", fit.h01_residual);
    // Irreducible part: the eigenbasis diagonal of dH0/dt, i.e. the level velocities.
    let eig = drifting_three_level(t).unwrap().eigh();
    let hdot = central_rate(&drifting_three_level, t, dt).unwrap();
    let rot = eig.vectors.adjoint() * hdot.matrix() * &eig.vectors;
    let diag = (0..3).map(|k| rot[(k, k)].norm_sqr()).sum::<f64>().sqrt();
    assert!((fit.objective - diag).abs() < 1e-8, "{} vs {diag}", fit.objective);
    let spectral = cd_term(&drifting_three_level, t, dt).unwrap();
    let gap = fit.h1.clone() - spectral;
    let h0 = drifting_three_level(t).unwrap();
    // Any difference from the spectral term commutes with H0.
    let comm = h0.matrix() * gap.matrix() - gap.matrix() * h0.matrix();
    assert!(comm.norm() < 1e-8);
}

fn designed_pair() -> (ThetaPolynomial<f64>, f64) {
    let p = ThetaPolynomial::new(0.0, PI / 2.0, 0.0, 1.0).unwrap();
    (p, 2.0 * threshold_field(PI / 2.0, 1.0))
}

#[test]
fn designed_two_level_pair_is_identified() {
    let (p, h) = designed_pair();
    let axis = move |t: f64| {
        let r = p.rate(t) / h;
        let s = (1.0 - r * r).sqrt();
        let th = p.value(t);
        [s * th.sin(), r, s * th.cos()]
    };
    let ham = move |t: f64| Ok(HermitianOperator::bloch(axis(t)).scale(h / 2.0));
    let inv = move |t: f64| {
        let th = p.value(t);
        Ok(HermitianOperator::bloch([th.sin(), 0.0, th.cos()]))
    };
    let grid = TimeGrid::new(0.0, 1.0, 400).unwrap();
    let id = invariant_cd_identify(&inv, &ham, 1.0, &grid, 1e-5).unwrap();
    assert!(id.passed, "{id:?}");
    assert!(id.report.eigenvalue_drift_max < 1e-12);
    assert!(id.commutator_ratio_max < 1e-6);

    let corrupted = move |t: f64| inv(t).map(|op| op.scale(1.0 + 0.1 * t));
    let bad = invariant_cd_identify(&corrupted, &ham, 1.0, &grid, 1e-5).unwrap();
    assert!(!bad.passed);
    assert!(bad.report.eigenvalue_drift_max > 0.09);
}

#[test]
fn static_pair_is_identified() {
    let z = |_t: f64| Ok(HermitianOperator::pauli_z());
    let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
    let id = invariant_cd_identify(&z, &z, 2.0, &grid, 1e-3).unwrap();
    assert!(id.passed);
    assert_eq!(id.report.residual_max, 0.0);
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianOperator<f64> {
    let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex::new(rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            let z = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    HermitianOperator::new(m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn full_basis_fit_beats_any_trial(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trial = random_hermitian(&mut rng, 3);
        let (t, dt) = (0.4, 1e-5);
        let fit = variational_cd(&drifting_three_level, &BasisSet::complete(3).unwrap(), t, dt, Objective::Inner).unwrap();
        let h0 = drifting_three_level(t).unwrap();
        let hdot = central_rate(&drifting_three_level, t, dt).unwrap();
        let i = Complex::new(0.0, 1.0);
        let r = hdot.matrix().map(|z| z * i) - (trial.matrix() * h0.matrix() - h0.matrix() * trial.matrix());
        prop_assert!(fit.objective <= r.norm() + 1e-12);
    }
}
