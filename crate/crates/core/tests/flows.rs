use nalgebra::DMatrix;
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sta_core::flows::*;
use sta_core::operator::HermitianOperator;
use sta_core::propagator::{CoordinateGrid, TimeGrid};

fn random_hermitian(seed: u64, n: usize, diag_scale: f64) -> HermitianOperator<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex::new(rng.random_range(-diag_scale..diag_scale), 0.0);
        for j in i + 1..n {
            let z = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    HermitianOperator::new(m).unwrap()
}

#[test]
fn wegner_diagonal_input_is_a_fixed_point() {
    let h = HermitianOperator::diagonal(&[0.5, -1.0, 2.0]).unwrap();
    let run = wegner_flow(&h, &WegnerOptions { s_max: Some(1.0), ..Default::default() }).unwrap();
    assert!(run.converged);
    assert_eq!(run.final_h, h);
    let check = offdiag_decay_check(&run);
    assert_eq!(check.checked, 0);
    assert!(check.monotone);
}

#[test]
fn wegner_random_6x6_diagonalizes() {
    let h = random_hermitian(3, 6, 2.0);
    let run = wegner_flow(&h, &WegnerOptions::default()).unwrap();
    let ev = h.eigenvalues();
    for (a, b) in run.sorted_diagonal().iter().zip(&ev) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    assert!(run.trace.spectral_drift() < 1e-8);
    let check = offdiag_decay_check(&run);
    assert!(check.monotone && check.checked > 100);
    assert!(check.max_relative_mismatch < 1e-4, "{check:?}");
}

#[test]
fn wegner_decay_identity_is_second_order_in_the_step() {
    let h = random_hermitian(5, 4, 1.0);
    let mismatch = |dt: f64| {
        let run = wegner_flow(&h, &WegnerOptions { s_max: Some(2.0), dt, ..Default::default() }).unwrap();
        offdiag_decay_check(&run).max_relative_mismatch
    };
    let ratio = mismatch(4e-3) / mismatch(2e-3);
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn wegner_offdiag_weight_never_increases(seed in 0u64..10_000) {
        let h = random_hermitian(seed, 4, 1.5);
        let run = wegner_flow(&h, &WegnerOptions { s_max: Some(3.0), dt: 2e-3, ..Default::default() }).unwrap();
        let check = offdiag_decay_check(&run);
        prop_assert!(check.monotone, "{:?}", check);
        prop_assert!(run.trace.spectral_drift() < 1e-8);
    }

    #[test]
    fn wegner_generator_is_hermitian_and_vanishes_on_diagonals(seed in 0u64..10_000) {
        let h = random_hermitian(seed, 5, 1.0);
        let eta = wegner_generator(&h);
        prop_assert!(HermitianOperator::new(eta.matrix().clone()).is_ok());
        prop_assert!(wegner_generator(&h.diagonal_part()).hs_norm() == 0.0);
    }

    #[test]
    fn toda_rhs_telescopes(j in prop::collection::vec(-2.0f64..2.0, 1..9), shift in -1.0f64..1.0) {
        let h: Vec<f64> = (0..=j.len()).map(|n| shift + 0.3 * n as f64).collect();
        let (_, dh) = toda_rhs(&j, &h).unwrap();
        prop_assert!(dh.iter().sum::<f64>().abs() < 1e-12);
    }
}

fn seeded_chain(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = (0..n - 1).map(|_| rng.random_range(0.0..1.0)).collect();
    let h = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (j, h)
}

#[test]
fn toda_two_sites_keep_closed_form_levels() {
    let (j, h) = (0.8f64, [0.4f64, -0.6]);
    let mean = 0.5 * (h[0] + h[1]);
    let rad = (0.25 * (h[0] - h[1]).powi(2) + j * j).sqrt();
    let run = toda_flow(&[j], &h, &TimeGrid::new(0.0, 5.0, 5000).unwrap()).unwrap();
    for (_, ev) in &run.trace.eigenvalue_snapshots {
        assert!((ev[0] - (mean - rad)).abs() < 1e-10);
        assert!((ev[1] - (mean + rad)).abs() < 1e-10);
    }
}

#[test]
fn toda_eight_sites_isospectral_against_dense_oracle() {
    let (j, h) = seeded_chain(17, 8);
    let run = toda_flow(&j, &h, &TimeGrid::new(0.0, 10.0, 10_000).unwrap()).unwrap();
    let dense = nalgebra::SymmetricEigen::new(run.matrix(0).to_dense());
    let mut oracle: Vec<f64> = dense.eigenvalues.iter().copied().collect();
    oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in run.trace.eigenvalue_snapshots[0].1.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(run.trace.spectral_drift() < 1e-8);
    assert!(run.trace_drift() < 1e-10);
    assert!(run.trace.warnings.is_empty());
}

#[test]
fn spin_two_sites_match_single_particle_sector() {
    let (j, h) = (0.7f64, [0.3f64, -0.9]);
    let lax = spin_lax_build(&[j], &h).unwrap();
    let rad = (0.25 * (h[0] - h[1]).powi(2) + j * j).sqrt();
    let s = 0.5 * (h[0] + h[1]);
    let mut want = vec![-rad, rad, s, -s];
    want.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in lax.l.eigenvalues().iter().zip(&want) {
        assert!((a - b).abs() < 1e-13, "{a} vs {b}");
    }
}

#[test]
fn spin_four_sites_lax_residual() {
    let (j, h) = seeded_chain(23, 4);
    let run = toda_flow(&j, &h, &TimeGrid::new(0.0, 10.0, 10_000).unwrap()).unwrap();
    let check = spin_lax_residual(&run).unwrap();
    assert!(check.residual_max < 1e-6, "{check:?}");
    assert!(check.spectral_drift < 1e-7, "{check:?}");
}

#[test]
fn spin_chain_capacity_is_enforced() {
    let run = toda_flow(&[0.1; 8], &[0.0; 9], &TimeGrid::new(0.0, 0.1, 10).unwrap()).unwrap();
    assert!(matches!(spin_lax_residual(&run), Err(sta_core::error::Error::Capacity(_))));
}

#[test]
fn kdv_residual_is_second_order() {
    let res = |points: usize| {
        let g = CoordinateGrid::new(20.0, points).unwrap();
        let f = kdv_soliton(1.0, &g, 0.3).unwrap();
        kdv_residual(&f, g.dx()).unwrap()
    };
    let (a, b, c) = (res(1024), res(2048), res(4096));
    assert!((3.5..4.5).contains(&(a / b)), "{a} {b}");
    assert!((3.5..4.5).contains(&(b / c)), "{b} {c}");
}

#[test]
fn kdv_ground_level_matches_poschl_teller_and_is_conserved() {
    let g = CoordinateGrid::new(20.0, 2048).unwrap();
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
    let trace = kdv_boundstate_check(1.0, &g, &times).unwrap();
    assert!((trace.e0[0] + 1.0).abs() < 1e-3, "{}", trace.e0[0]);
    assert!(trace.drift() < 1e-4, "{}", trace.drift());
    assert!(trace.warnings.is_empty());

    // Independent dense eigensolve of the same operator.
    let f = kdv_soliton(1.0, &CoordinateGrid::new(20.0, 512).unwrap(), 0.0).unwrap();
    let dense = nalgebra::SymmetricEigen::new(schrodinger_operator(&f.u, f.grid.dx()).unwrap().to_dense());
    let lowest = dense.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let sturm = schrodinger_operator(&f.u, f.grid.dx()).unwrap().eigenvalue(0).unwrap();
    assert!((lowest - sturm).abs() < 1e-10);
}

#[test]
fn kdv_ground_level_converges_quadratically() {
    let err = |points: usize| -> f64 {
        let g = CoordinateGrid::new(20.0, points).unwrap();
        let tr = kdv_boundstate_check(1.5f64, &g, &[0.0]).unwrap();
        (tr.e0[0] + 2.25).abs()
    };
    let ratio = err(512) / err(1024);
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn kdv_near_wall_warns() {
    let g = CoordinateGrid::new(20.0, 1024).unwrap();
    let tr = kdv_boundstate_check(1.0, &g, &[0.0, 4.2]).unwrap();
    assert_eq!(tr.warnings.len(), 1);
}
