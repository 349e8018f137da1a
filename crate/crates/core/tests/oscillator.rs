use num_complex::Complex;
use sta_core::oscillator::*;
use sta_core::propagator::{integrate_ode, TimeGrid};

fn grid(tf: f64, steps: usize) -> TimeGrid<f64> {
    TimeGrid::new(0.0, tf, steps).unwrap()
}

#[test]
fn endpoint_frequencies_over_parameter_table() {
    for w0tf in [2.0, 1.0, 0.5] {
        for ratio in [0.1, 0.5, 2.0, 10.0] {
            let sol = polynomial_b(1.0, ratio, &grid(w0tf, 2000)).unwrap();
            let p = omega_from_b(&sol).unwrap();
            assert!(p.endpoint_error() < 1e-9, "{w0tf} {ratio}");
            assert!((p.omegaf - ratio).abs() < 1e-12);
        }
    }
}

#[test]
fn schrodinger_residual_is_second_order() {
    let sol = polynomial_b(1.0, 0.5, &grid(1.0, 100)).unwrap();
    let mut prev: Option<f64> = None;
    for (n, dt) in [(256, 4e-3), (512, 2e-3), (1024, 1e-3)] {
        let xg = coordinate_grid(&sol, n).unwrap();
        let r = schrodinger_residual(&sol, &xg, 0.37, dt).unwrap();
        if let Some(p) = prev {
            let ratio = p / r;
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        }
        prev = Some(r);
    }
}

#[test]
fn invariant_expectation_is_constant() {
    for (w0, wf, tf) in [(1.0, 0.5, 1.0), (2.0, 8.0, 0.3), (1.0, 0.1, 0.5)] {
        let sol = polynomial_b(w0, wf, &grid(tf, 200)).unwrap();
        let xg = coordinate_grid(&sol, DEFAULT_POINTS).unwrap();
        for t in sol.grid().nodes() {
            let e = invariant_expectation(&sol, &xg, t);
            assert!((e - w0 / 2.0).abs() < 1e-6, "t = {t}: {e}");
        }
    }
}

#[test]
fn propagated_gaussian_matches_closed_form() {
    let sol = polynomial_b(1.0, 0.5, &grid(1.0, 100)).unwrap();
    let xg = coordinate_grid(&sol, 2048).unwrap();
    let tg = grid(1.0, 2000);
    let psi0 = ground_wavefunction(&sol, &xg, 0.0).psi;
    let states = propagate_crank_nicolson(|t| sol.omega_sq_at(t), &psi0, &xg, &tg).unwrap();
    for k in (0..=2000).step_by(250) {
        let t = tg.node(k);
        let exact = ground_wavefunction(&sol, &xg, t).psi;
        let diff: Vec<Complex<f64>> = states[k].iter().zip(&exact).map(|(a, b)| a - b).collect();
        assert!(xg.norm(&diff) < 1e-3, "t = {t}: {}", xg.norm(&diff));
        let e = grid_invariant_expectation(&sol, &xg, t, &states[k]);
        assert!((e - 0.5).abs() < 1e-3);
    }
}

#[test]
fn forward_and_inverse_problems_agree() {
    let g = grid(1.0, 2000);
    let poly = polynomial_b(1.0, 0.3, &g).unwrap();
    let solved = ermakov_solve(|t| poly.omega_sq_at(t), 1.0, 1.0, 0.0, &g).unwrap();
    for (a, b) in solved.b().iter().zip(poly.b()) {
        assert!((a - b).abs() < 1e-6);
    }
    let back = omega_from_b(&solved).unwrap();
    let fwd = omega_from_b(&poly).unwrap();
    for (a, b) in back.omega_sq.iter().zip(&fwd.omega_sq) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn constant_frequency_is_fixed_point() {
    let g = grid(4.0, 400);
    let sol = ermakov_solve(|_| 2.25, 1.5, 1.0, 0.0, &g).unwrap();
    assert!(sol.b().iter().all(|b| (b - 1.0).abs() < 1e-14));
}

#[test]
fn adiabatic_limit_is_approached_monotonically() {
    let mut last = f64::INFINITY;
    for tf in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        let sol = polynomial_b(1.0, 0.5, &grid(tf, 1000)).unwrap();
        let d = sol.nonadiabaticity();
        assert!(d < last);
        last = d;
    }
}

#[test]
fn linear_invariant_with_cosine_solution() {
    let w = 1.3;
    let g = grid(2.0, 40);
    let xg = CoordinateGrid::new(10.0, 1024).unwrap();
    let chk = linear_invariant_check(|t: f64| (w * t).cos(), |t| -w * (w * t).sin(), |_| w * w, &g, &xg).unwrap();
    // discretization level: bounded by a small multiple of dx^2
    assert!(chk.residual < 2.0 * xg.dx().powi(2), "{}", chk.residual);
    assert!(!chk.boundary_compatible);
    assert!(linear_invariant_check(|_| 0.0, |_| 0.0, |_| 1.0, &g, &xg).is_err());
    assert!(linear_invariant_check(|t: f64| t.cos(), |t| -t.sin(), |_| 4.0, &g, &xg).is_err());
}

#[test]
fn linear_invariant_under_random_frequency() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let amps: Vec<f64> = (0..3).map(|_| rng.random_range(-0.4..0.4)).collect();
    let w2 = move |t: f64| 1.0 + amps[0] * t.sin() + amps[1] * (2.0 * t).cos() + amps[2] * t;
    let g = grid(2.0, 4000);
    let traj = integrate_ode(
        |t: f64, y: &[f64], out: &mut [f64]| {
            out[0] = y[1];
            out[1] = -w2(t) * y[0];
        },
        &[1.0, 0.2],
        &g,
    )
    .unwrap();
    let nodes = g.nodes();
    let q = sta_core::interp::Quintic::new(
        g,
        traj.iter().map(|y| y[0]).collect(),
        traj.iter().map(|y| y[1]).collect(),
        nodes.iter().zip(&traj).map(|(&t, y)| -w2(t) * y[0]).collect(),
    );
    let coarse = grid(2.0, 20);
    let mut prev = None;
    for n in [256, 512] {
        let xg = CoordinateGrid::new(10.0, n).unwrap();
        let chk = linear_invariant_check(|t| q.eval(t).0, |t| q.eval(t).1, &w2, &coarse, &xg).unwrap();
        if let Some(p) = prev {
            let ratio: f64 = p / chk.residual;
            assert!(ratio > 3.0, "ratio {ratio}");
        }
        prev = Some(chk.residual);
    }
}

#[test]
fn generalized_pair_reduces_and_refines() {
    let sol = polynomial_b(1.0, 0.5, &grid(1.0, 200)).unwrap();
    let xg = CoordinateGrid::new(12.0, 1024).unwrap();
    let plain = generalized_pair_check(|_| 0.0, |_| 0.0, &sol, 0.0, 0.0, &xg).unwrap();
    assert!(plain.residual_max < 3.0 * xg.dx().powi(2), "{}", plain.residual_max);

    let steady = polynomial_b(1.0, 1.0, &grid(1.0, 200)).unwrap();
    let r = generalized_pair_check(|_| 0.5, |_| 0.0, &steady, 0.5, 0.0, &xg).unwrap();
    assert!(r.residual_max < 3.0 * xg.dx().powi(2), "{}", r.residual_max);

    let mut prev = None;
    for n in [256, 512, 1024] {
        let xg = CoordinateGrid::new(12.0, n).unwrap();
        let r = generalized_pair_check(|t: f64| 0.8 * t, |y: f64| y.powi(4), &sol, 0.0, 0.0, &xg).unwrap();
        if let Some(p) = prev {
            let ratio: f64 = p / r.residual_max;
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        }
        prev = Some(r.residual_max);
    }
}
