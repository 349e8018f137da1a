//! Spin-1/2 inverse engineering on the Bloch sphere.
//!
//! `H(t) = (h(t)/2) n(t)·σ` and `I(t) = e(t)·σ` with
//! `e = (sinθ cosφ, sinθ sinφ, cosθ)`. The invariant relation reduces to
//! `de/dt = h n × e`.

use crate::error::{Error, Result};
use crate::invariant::{self, EndpointDerivatives, ProtocolPair, Schedule, VerificationReport};
use crate::linalg::CVector;
use crate::operator::{BasisSet, HermitianOperator};
use crate::propagator::{propagate_steps, StateVector, TimeGrid};
use crate::scalar::Real;

/// Endpoint rates below this count as zero for boundary compliance.
pub const BOUNDARY_RATE_TOL: f64 = 1e-8;
/// `|θ̇|/h` up to `1 + RATIO_SLACK` is clamped to 1 instead of rejected.
pub const RATIO_SLACK: f64 = 1e-12;
/// Default singularity margin of [`restricted_field`], in radians.
pub const DEFAULT_MARGIN: f64 = 1e-3;

/// `θ(t) = θ0 + Δθ (3s² − 2s³)` with `s = (t − t0)/t_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaPolynomial<T: Real> {
    pub theta0: T,
    pub thetaf: T,
    pub t0: T,
    pub duration: T,
}

impl<T: Real> ThetaPolynomial<T> {
    pub fn new(theta0: T, thetaf: T, t0: T, duration: T) -> Result<Self> {
        if duration <= T::zero() {
            return Err(Error::InvalidArgument("duration must be positive".into()));
        }
        Ok(Self {
            theta0,
            thetaf,
            t0,
            duration,
        })
    }

    pub fn on_grid(theta0: T, thetaf: T, grid: &TimeGrid<T>) -> Self {
        Self {
            theta0,
            thetaf,
            t0: grid.t0(),
            duration: grid.duration(),
        }
    }

    fn s(&self, t: T) -> T {
        (t - self.t0) / self.duration
    }

    pub fn delta(&self) -> T {
        self.thetaf - self.theta0
    }

    pub fn value(&self, t: T) -> T {
        let s = self.s(t);
        self.theta0 + self.delta() * s * s * (T::lit(3.0) - T::lit(2.0) * s)
    }

    pub fn rate(&self, t: T) -> T {
        let s = self.s(t);
        T::lit(6.0) * self.delta() * s * (T::one() - s) / self.duration
    }

    pub fn accel(&self, t: T) -> T {
        let s = self.s(t);
        T::lit(6.0) * self.delta() * (T::one() - T::lit(2.0) * s) / (self.duration * self.duration)
    }

    /// Largest `|θ̇|`, reached at mid-protocol.
    pub fn peak_rate(&self) -> T {
        T::lit(1.5) * self.delta().abs() / self.duration
    }
}

/// Smallest constant field admitting the polynomial schedule: `3|Δθ|/(2 t_f)`.
pub fn threshold_field<T: Real>(delta_theta: T, duration: T) -> T {
    T::lit(3.0) * delta_theta.abs() / (T::lit(2.0) * duration)
}

/// Polar and azimuthal angles of the invariant axis with their rates.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochSchedule<T: Real> {
    grid: TimeGrid<T>,
    theta: Vec<T>,
    phi: Vec<T>,
    theta_dot: Vec<T>,
    phi_dot: Vec<T>,
}

impl<T: Real> BlochSchedule<T> {
    /// Samples analytic angle functions and their derivatives.
    pub fn from_fns<A, B, C, D>(grid: TimeGrid<T>, theta: A, theta_dot: B, phi: C, phi_dot: D) -> Self
    where
        A: Fn(T) -> T,
        B: Fn(T) -> T,
        C: Fn(T) -> T,
        D: Fn(T) -> T,
    {
        let nodes = grid.nodes();
        Self {
            theta: nodes.iter().map(|&t| theta(t)).collect(),
            theta_dot: nodes.iter().map(|&t| theta_dot(t)).collect(),
            phi: nodes.iter().map(|&t| phi(t)).collect(),
            phi_dot: nodes.iter().map(|&t| phi_dot(t)).collect(),
            grid,
        }
    }

    /// Rates from second-order finite differences of the samples.
    pub fn from_samples(grid: TimeGrid<T>, theta: Vec<T>, phi: Option<Vec<T>>) -> Result<Self> {
        let phi = phi.unwrap_or_else(|| vec![T::zero(); grid.len()]);
        if theta.len() != grid.len() || phi.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} theta and {} phi samples for {} nodes",
                theta.len(),
                phi.len(),
                grid.len()
            )));
        }
        let dt = grid.dt();
        Ok(Self {
            theta_dot: crate::fd::derivative(&theta, dt),
            phi_dot: crate::fd::derivative(&phi, dt),
            theta,
            phi,
            grid,
        })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn phi(&self) -> &[T] {
        &self.phi
    }

    pub fn theta_dot(&self) -> &[T] {
        &self.theta_dot
    }

    pub fn phi_dot(&self) -> &[T] {
        &self.phi_dot
    }

    /// `e(t_k)`.
    pub fn axis(&self, k: usize) -> [T; 3] {
        let (st, ct) = (self.theta[k].sin(), self.theta[k].cos());
        let (sp, cp) = (self.phi[k].sin(), self.phi[k].cos());
        [st * cp, st * sp, ct]
    }

    /// `ė(t_k)` from the stored angle rates.
    pub fn axis_rate(&self, k: usize) -> [T; 3] {
        let (st, ct) = (self.theta[k].sin(), self.theta[k].cos());
        let (sp, cp) = (self.phi[k].sin(), self.phi[k].cos());
        let (td, pd) = (self.theta_dot[k], self.phi_dot[k]);
        [
            td * ct * cp - pd * st * sp,
            td * ct * sp + pd * st * cp,
            -td * st,
        ]
    }

    /// Both angles at rest at the two ends.
    pub fn is_boundary_compliant(&self) -> bool {
        let last = self.grid.steps();
        let tol = T::tol(BOUNDARY_RATE_TOL);
        [0, last]
            .iter()
            .all(|&k| self.theta_dot[k].abs() <= tol && self.phi_dot[k].abs() <= tol)
    }

    /// `I(t_k) = e·σ`.
    pub fn invariant(&self, k: usize) -> HermitianOperator<T> {
        HermitianOperator::bloch(self.axis(k))
    }
}

/// Polynomial schedule with `φ = 0` and analytic rates.
pub fn polynomial_theta<T: Real>(theta0: T, thetaf: T, grid: &TimeGrid<T>) -> BlochSchedule<T> {
    let p = ThetaPolynomial::on_grid(theta0, thetaf, grid);
    BlochSchedule::from_fns(
        *grid,
        |t| p.value(t),
        |t| p.rate(t),
        |_| T::zero(),
        |_| T::zero(),
    )
}

/// Field magnitude and direction per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldProtocol<T: Real> {
    grid: TimeGrid<T>,
    h: Vec<T>,
    n: Vec<[T; 3]>,
}

impl<T: Real> FieldProtocol<T> {
    /// Checks `h ≥ 0` and `|n| = 1` to 1e-10.
    pub fn new(grid: TimeGrid<T>, h: Vec<T>, n: Vec<[T; 3]>) -> Result<Self> {
        if h.len() != grid.len() || n.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} field values and {} directions for {} nodes",
                h.len(),
                n.len(),
                grid.len()
            )));
        }
        if let Some(k) = h.iter().position(|&v| v < T::zero()) {
            return Err(Error::InvalidArgument(format!("negative field {} at node {k}", h[k])));
        }
        for (k, v) in n.iter().enumerate() {
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if (norm - T::one()).abs() > T::tol(1e-10) {
                return Err(Error::InvalidArgument(format!("direction at node {k} has norm {norm}")));
            }
        }
        Ok(Self { grid, h, n })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn h(&self) -> &[T] {
        &self.h
    }

    pub fn n(&self) -> &[[T; 3]] {
        &self.n
    }

    /// `H(t_k) = (h/2) n·σ`.
    pub fn hamiltonian(&self, k: usize) -> HermitianOperator<T> {
        let half = self.h[k] * T::lit(0.5);
        let n = self.n[k];
        HermitianOperator::bloch([half * n[0], half * n[1], half * n[2]])
    }

    pub fn peak_field(&self) -> (usize, T) {
        self.h
            .iter()
            .copied()
            .enumerate()
            .fold((0, T::zero()), |best, (k, v)| if v > best.1 { (k, v) } else { best })
    }

    /// Pauli-coefficient pair `(h n/2, e)` for the invariant engine.
    pub fn pair(&self, sched: &BlochSchedule<T>) -> Result<ProtocolPair<T>> {
        check_grids(self, sched)?;
        let last = self.grid.steps();
        let grid = self.grid;
        let h_vals: Vec<Vec<T>> = (0..grid.len())
            .map(|k| {
                let half = self.h[k] * T::lit(0.5);
                self.n[k].iter().map(|&c| c * half).collect()
            })
            .collect();
        let b_vals: Vec<Vec<T>> = (0..grid.len()).map(|k| sched.axis(k).to_vec()).collect();
        let ends = EndpointDerivatives {
            first: [sched.axis_rate(0).to_vec(), sched.axis_rate(last).to_vec()],
            second: None,
        };
        let h = Schedule::new(grid, h_vals, None)?;
        let b = Schedule::new(grid, b_vals, Some(ends))?;
        ProtocolPair::new(BasisSet::pauli(), h, b)
    }
}

fn check_grids<T: Real>(proto: &FieldProtocol<T>, sched: &BlochSchedule<T>) -> Result<()> {
    if proto.grid != sched.grid {
        return Err(Error::Shape("protocol and schedule grids differ".into()));
    }
    Ok(())
}

fn cross<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3<T: Real>(v: [T; 3]) -> T {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// `n = (√(1−r²) sinθ, r, √(1−r²) cosθ)` with `r = θ̇/h`, nonnegative root.
///
/// Requires `φ = 0`. Fails at the node where `|θ̇| − h` is largest when the
/// threshold `|θ̇| ≤ h` is violated anywhere.
pub fn field_from_invariant<T, F>(sched: &BlochSchedule<T>, h: F) -> Result<FieldProtocol<T>>
where
    T: Real,
    F: Fn(T) -> T,
{
    let grid = sched.grid;
    let nodes = grid.nodes();
    if sched.phi.iter().chain(&sched.phi_dot).any(|v| *v != T::zero()) {
        return Err(Error::UnsupportedSchedule(
            "field_from_invariant needs phi = 0; use restricted_field for azimuthal motion".into(),
        ));
    }
    let field: Vec<T> = nodes.iter().map(|&t| h(t)).collect();
    if let Some(k) = field.iter().position(|&v| v < T::zero()) {
        return Err(Error::InvalidArgument(format!("negative field {} at node {k}", field[k])));
    }
    let slack = T::one() + T::lit(RATIO_SLACK);
    let mut worst: Option<(usize, T)> = None;
    for (k, (&f, &td)) in field.iter().zip(&sched.theta_dot).enumerate() {
        let excess = td.abs() - f * slack;
        if excess > T::zero() && worst.is_none_or(|(_, w)| excess > w) {
            worst = Some((k, excess));
        }
    }
    if let Some((k, _)) = worst {
        return Err(Error::Threshold {
            node: k,
            t: nodes[k].as_f64(),
            field: field[k].as_f64(),
            required: sched.theta_dot[k].abs().as_f64(),
        });
    }
    let n = (0..grid.len())
        .map(|k| {
            let r = if field[k] > T::zero() {
                let r = sched.theta_dot[k] / field[k];
                r.max(-T::one()).min(T::one())
            } else {
                T::zero()
            };
            let root = (T::one() - r * r).max(T::zero()).sqrt();
            let th = sched.theta[k];
            [root * th.sin(), r, root * th.cos()]
        })
        .collect();
    FieldProtocol::new(grid, field, n)
}

/// Field fixed along `sgn(Δθ)·ŷ` with `h = |θ̇|`.
///
/// Needs monotone θ so a single direction works throughout.
pub fn y_axis_protocol<T: Real>(sched: &BlochSchedule<T>) -> Result<FieldProtocol<T>> {
    if sched.phi.iter().chain(&sched.phi_dot).any(|v| *v != T::zero()) {
        return Err(Error::UnsupportedSchedule("y-axis protocol needs phi = 0".into()));
    }
    let tol = T::tol(1e-14) * sched.theta_dot.iter().fold(T::one(), |m, v| m.max(v.abs()));
    let rising = sched.theta_dot.iter().any(|&v| v > tol);
    let falling = sched.theta_dot.iter().any(|&v| v < -tol);
    if rising && falling {
        return Err(Error::UnsupportedSchedule("theta is not monotone".into()));
    }
    let sign = if falling { -T::one() } else { T::one() };
    let h = sched.theta_dot.iter().map(|v| v.abs()).collect();
    let n = vec![[T::zero(), sign, T::zero()]; sched.grid.len()];
    FieldProtocol::new(sched.grid, h, n)
}

/// Field confined to the x-z plane, `n = (sinΘ, 0, cosΘ)`.
///
/// `h cosΘ = −θ̇/(tanθ tanφ) + φ̇`, `h sinΘ = −θ̇/sinφ`. Interior nodes with
/// `|sinφ| < margin` or `|tanθ| < margin` are rejected; at the ends the
/// singular terms are dropped only when `θ̇` vanishes there.
pub fn restricted_field<T: Real>(sched: &BlochSchedule<T>, margin: T) -> Result<FieldProtocol<T>> {
    if margin <= T::zero() {
        return Err(Error::InvalidArgument("margin must be positive".into()));
    }
    let grid = sched.grid;
    let last = grid.steps();
    let mut h = Vec::with_capacity(grid.len());
    let mut n = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let (th, ph) = (sched.theta[k], sched.phi[k]);
        let (td, pd) = (sched.theta_dot[k], sched.phi_dot[k]);
        let sin_phi = ph.sin();
        let tan_theta_small = th.sin().abs() < margin * th.cos().abs();
        let tan_phi_small = sin_phi.abs() < margin * ph.cos().abs();
        let singular = sin_phi.abs() < margin || tan_theta_small || tan_phi_small;
        let at_end = k == 0 || k == last;
        let (cos_part, sin_part) = if singular {
            if !at_end || td.abs() > T::tol(BOUNDARY_RATE_TOL) {
                return Err(Error::Singular {
                    node: k,
                    t: grid.node(k).as_f64(),
                    reason: format!(
                        "|sin phi| = {:.3e}, theta = {:.6}, phi = {:.6} within margin {:.1e}",
                        sin_phi.abs().as_f64(),
                        th.as_f64(),
                        ph.as_f64(),
                        margin.as_f64()
                    ),
                });
            }
            (pd, T::zero())
        } else {
            let cot_theta = th.cos() / th.sin();
            let cot_phi = ph.cos() / sin_phi;
            (-td * cot_theta * cot_phi + pd, -td / sin_phi)
        };
        let mag = (cos_part * cos_part + sin_part * sin_part).sqrt();
        let big_theta = sin_part.atan2(cos_part);
        h.push(mag);
        n.push([big_theta.sin(), T::zero(), big_theta.cos()]);
    }
    FieldProtocol::new(grid, h, n)
}

/// Adiabatic reference without inverse engineering: `n = e`, field `h`.
pub fn adiabatic_reference<T, F>(sched: &BlochSchedule<T>, h: F) -> Result<FieldProtocol<T>>
where
    T: Real,
    F: Fn(T) -> T,
{
    let grid = sched.grid;
    let field = grid.nodes().into_iter().map(h).collect();
    let n = (0..grid.len()).map(|k| sched.axis(k)).collect();
    FieldProtocol::new(grid, field, n)
}

/// `max_k |ė − h n × e|` over all nodes.
pub fn transport_residual<T: Real>(proto: &FieldProtocol<T>, sched: &BlochSchedule<T>) -> Result<T> {
    check_grids(proto, sched)?;
    let mut worst = T::zero();
    for k in 0..proto.grid.len() {
        let e = sched.axis(k);
        let de = sched.axis_rate(k);
        let hn = proto.n[k].map(|c| c * proto.h[k]);
        let rot = cross(hn, e);
        let r = norm3([de[0] - rot[0], de[1] - rot[1], de[2] - rot[2]]);
        if r > worst {
            worst = r;
        }
    }
    Ok(worst)
}

/// Invariant eigenstate followed by [`verify_protocol_branch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    /// Eigenvalue −1 of `e·σ`.
    #[default]
    Lower,
    /// Eigenvalue +1.
    Upper,
}

/// [`verify_protocol_branch`] on the λ = −1 eigenstate.
pub fn verify_protocol<T: Real>(proto: &FieldProtocol<T>, sched: &BlochSchedule<T>) -> Result<VerificationReport> {
    verify_protocol_branch(proto, sched, Branch::Lower)
}

/// Propagates `ψ(0) = φ(0)` and compares with the invariant eigenstate.
///
/// With an even number of grid steps the even nodes are the propagation
/// nodes and the odd nodes their exact midpoints, so the propagation uses
/// half the grid steps. Otherwise each step uses the mean of its two end
/// Hamiltonians.
pub fn verify_protocol_branch<T: Real>(
    proto: &FieldProtocol<T>,
    sched: &BlochSchedule<T>,
    branch: Branch,
) -> Result<VerificationReport> {
    check_grids(proto, sched)?;
    let grid = &proto.grid;
    let steps = grid.steps();
    let paired = steps.is_multiple_of(2);
    let (prop_grid, stride) = if paired {
        (grid.with_steps(steps / 2)?, 2)
    } else {
        (*grid, 1)
    };
    let level = match branch {
        Branch::Lower => 0,
        Branch::Upper => 1,
    };
    let track = invariant::eigentrack_nodes(&prop_grid, |k| Ok(sched.invariant(k * stride)))?;
    let phi: Vec<CVector<T>> = track.branch(level);
    let psi0 = StateVector::normalized(phi[0].clone())?;
    let psi = propagate_steps(&psi0, prop_grid.dt(), prop_grid.steps(), |k| {
        if paired {
            Ok(proto.hamiltonian(2 * k + 1))
        } else {
            Ok((proto.hamiltonian(k) + proto.hamiltonian(k + 1)) * T::lit(0.5))
        }
    })?;
    let mut fidelity_min = T::one();
    for (p, s) in phi.iter().zip(&psi) {
        let ov = crate::linalg::inner(p, s.amplitudes()).norm_sqr();
        if ov < fidelity_min {
            fidelity_min = ov;
        }
    }
    let hs: Vec<HermitianOperator<T>> = (0..prop_grid.len()).map(|k| proto.hamiltonian(k * stride)).collect();
    let mut warnings = track.warnings.clone();
    let phase_error = match invariant::lr_phase_nodes(&hs, &phi, &prop_grid) {
        Ok(trace) => invariant::phase_mismatch(&phi, &psi, &trace.alpha).as_f64(),
        Err(e) => {
            warnings.push(format!("phase reconstruction skipped: {e}"));
            f64::NAN
        }
    };
    let boundary = invariant::boundary_check(&proto.pair(sched)?)?;
    warnings.extend(boundary.offending.iter().map(|o| format!("boundary condition violated: {o}")));
    Ok(VerificationReport {
        residual_max: transport_residual(proto, sched)?.as_f64(),
        eigenvalue_drift_max: track.drift_max.as_f64(),
        fidelity_min: fidelity_min.as_f64(),
        phase_error,
        boundary_ok: boundary.ok,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(steps: usize) -> TimeGrid<f64> {
        TimeGrid::new(0.0, 1.0, steps).unwrap()
    }

    #[test]
    fn threshold_closed_form() {
        assert!((threshold_field(PI / 2.0, 1.0) - 3.0 * PI / 4.0).abs() < 1e-15);
        let p = ThetaPolynomial::new(0.0, PI / 2.0, 0.0, 1.0).unwrap();
        assert!((p.rate(0.5) - p.peak_rate()).abs() < 1e-15);
        assert!((p.value(0.5) - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn constant_schedule_gives_n_equal_e() {
        let s = polynomial_theta(0.4, 0.4, &grid(10));
        let f = field_from_invariant(&s, |_| 1.0).unwrap();
        for k in 0..11 {
            assert_eq!(f.n()[k], s.axis(k));
        }
    }

    #[test]
    fn midpoint_direction_at_twice_threshold() {
        let s = polynomial_theta(0.0, PI / 2.0, &grid(10));
        let h0 = threshold_field(PI / 2.0, 1.0);
        let f = field_from_invariant(&s, |_| 2.0 * h0).unwrap();
        assert!((f.n()[5][1] - 0.5).abs() < 1e-14);
        let f = field_from_invariant(&s, |_| h0).unwrap();
        let n = f.n()[5];
        assert!(n[0].abs() < 1e-7 && (n[1] - 1.0).abs() < 1e-14 && n[2].abs() < 1e-7);
    }

    #[test]
    fn below_threshold_reports_midpoint() {
        let s = polynomial_theta(0.0, PI / 2.0, &grid(100));
        let h0 = threshold_field(PI / 2.0, 1.0);
        match field_from_invariant(&s, |_| 0.9 * h0) {
            Err(Error::Threshold { node, required, .. }) => {
                assert_eq!(node, 50);
                assert!((required - h0).abs() < 1e-12);
            }
            other => panic!("expected threshold error, got {other:?}"),
        }
    }

    #[test]
    fn y_axis_peak_and_monotonicity() {
        let s = polynomial_theta(0.0, PI / 2.0, &grid(10));
        let f = y_axis_protocol(&s).unwrap();
        assert!((f.h()[5] - 3.0 * PI / 4.0).abs() < 1e-14);
        assert_eq!(f.h()[0], 0.0);
        let g = grid(20);
        let wobble = BlochSchedule::from_fns(g, |t: f64| (6.0 * t).sin(), |t| 6.0 * (6.0 * t).cos(), |_| 0.0, |_| 0.0);
        assert!(matches!(y_axis_protocol(&wobble), Err(Error::UnsupportedSchedule(_))));
    }

    #[test]
    fn restricted_field_pure_azimuthal_rate() {
        let s = BlochSchedule::from_fns(grid(10), |_| 1.0, |_| 0.0, |t: f64| 0.5 + 2.0 * t, |_| 2.0);
        let f = restricted_field(&s, DEFAULT_MARGIN).unwrap();
        for k in 0..11 {
            assert!((f.h()[k] - 2.0).abs() < 1e-14);
            assert!(f.n()[k][0].abs() < 1e-14);
        }
    }

    #[test]
    fn restricted_field_rejects_phi_crossing_zero() {
        let s = BlochSchedule::from_fns(grid(10), |_| 1.0, |_| 0.3, |t: f64| t - 0.5, |_| 1.0);
        assert!(matches!(restricted_field(&s, DEFAULT_MARGIN), Err(Error::Singular { node: 5, .. })));
    }

    #[test]
    fn generic_over_f32() {
        let g = TimeGrid::new(0.0f32, 1.0, 10).unwrap();
        let s = polynomial_theta(0.0f32, 1.0, &g);
        let f = field_from_invariant(&s, |_| 5.0f32).unwrap();
        assert!(transport_residual(&f, &s).unwrap() < 1e-5);
    }
}
