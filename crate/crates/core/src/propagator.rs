//! Fixed-step ODE integration and unitary Schrödinger propagation.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{self, CVector};
use crate::operator::HermitianOperator;
use crate::scalar::Real;

/// Norm tolerance enforced when a [`StateVector`] is built.
pub const NORM_TOL: f64 = 1e-10;

/// Uniform grid `t_k = t0 + k (tf - t0) / steps`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T: Real> {
    t0: T,
    tf: T,
    steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t0: T, tf: T, steps: usize) -> Result<Self> {
        if !(tf > t0) {
            return Err(Error::InvalidArgument(format!(
                "time grid needs tf > t0, got [{t0}, {tf}]"
            )));
        }
        if steps < 2 {
            return Err(Error::InvalidArgument(format!(
                "time grid needs at least 2 steps, got {steps}"
            )));
        }
        Ok(Self { t0, tf, steps })
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn tf(&self) -> T {
        self.tf
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn duration(&self) -> T {
        self.tf - self.t0
    }

    pub fn dt(&self) -> T {
        self.duration() / T::count(self.steps)
    }

    pub fn node(&self, k: usize) -> T {
        if k == self.steps {
            return self.tf;
        }
        self.t0 + self.duration() * T::count(k) / T::count(self.steps)
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..=self.steps).map(|k| self.node(k)).collect()
    }

    /// Midpoint of step `k` (between nodes `k` and `k+1`).
    pub fn midpoint(&self, k: usize) -> T {
        (self.node(k) + self.node(k + 1)) * T::lit(0.5)
    }

    /// Same span with a different step count.
    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        Self::new(self.t0, self.tf, steps)
    }
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    amps: CVector<T>,
}

impl<T: Real> StateVector<T> {
    /// Rejects vectors whose Euclidean norm differs from 1 by more than [`NORM_TOL`].
    pub fn new(amps: CVector<T>) -> Result<Self> {
        let norm = linalg::inner(&amps, &amps).re.sqrt();
        if (norm - T::one()).abs() > T::tol(NORM_TOL) {
            return Err(Error::NotNormalized { norm: norm.as_f64() });
        }
        Ok(Self { amps })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(amps: CVector<T>) -> Result<Self> {
        let norm = linalg::inner(&amps, &amps).re.sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::NotNormalized { norm: norm.as_f64() });
        }
        Ok(Self {
            amps: amps.map(|z| z / norm),
        })
    }

    pub(crate) fn from_unit(amps: CVector<T>) -> Self {
        Self { amps }
    }

    /// `|i>` in a `dim`-dimensional space.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::Shape(format!("basis index {i} out of range for dim {dim}")));
        }
        let mut v = CVector::zeros(dim);
        v[i] = Complex::new(T::one(), T::zero());
        Ok(Self { amps: v })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector<T> {
        &self.amps
    }

    pub fn norm(&self) -> T {
        linalg::inner(&self.amps, &self.amps).re.sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "inner product of {}- and {}-dimensional states",
                self.dim(),
                other.dim()
            )));
        }
        Ok(linalg::inner(&self.amps, &other.amps))
    }
}

/// `|<a|b>|^2`.
pub fn fidelity<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> Result<T> {
    Ok(a.inner(b)?.norm_sqr())
}

/// One classical fourth-order Runge-Kutta step of `y' = f(t, y)`.
///
/// `rhs(t, y, dydt)` writes the derivative into `dydt`.
pub fn rk4_step<T: Real, F>(rhs: &mut F, t: T, y: &[T], dt: T) -> Vec<T>
where
    F: FnMut(T, &[T], &mut [T]),
{
    let n = y.len();
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];

    rhs(t, y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + half * dt * k1[i];
    }
    rhs(t + half * dt, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + half * dt * k2[i];
    }
    rhs(t + half * dt, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + dt * k3[i];
    }
    rhs(t + dt, &tmp, &mut k4);
    (0..n)
        .map(|i| y[i] + sixth * dt * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
        .collect()
}

/// Integrates `y' = f(t, y)` with RK4 on `grid`.
///
/// The trajectory has `steps + 1` entries and starts with `y0`. A non-finite
/// component aborts with [`Error::Divergence`] carrying the failing time.
pub fn integrate_ode<T: Real, F>(mut rhs: F, y0: &[T], grid: &TimeGrid<T>) -> Result<Vec<Vec<T>>>
where
    F: FnMut(T, &[T], &mut [T]),
{
    let mut traj = Vec::with_capacity(grid.len());
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { t: grid.t0().as_f64() });
    }
    traj.push(y0.to_vec());
    let dt = grid.dt();
    for k in 0..grid.steps() {
        let t = grid.node(k);
        let next = rk4_step(&mut rhs, t, &traj[k], dt);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                t: grid.node(k + 1).as_f64(),
            });
        }
        traj.push(next);
    }
    Ok(traj)
}

/// A Hermitian-operator-valued function of time.
///
/// Implemented for closures `Fn(T) -> Result<HermitianOperator<T>>`.
pub trait OperatorFn<T: Real> {
    fn at(&self, t: T) -> Result<HermitianOperator<T>>;
}

impl<T: Real, F> OperatorFn<T> for F
where
    F: Fn(T) -> Result<HermitianOperator<T>>,
{
    fn at(&self, t: T) -> Result<HermitianOperator<T>> {
        self(t)
    }
}

/// Propagates `psi0` under `H(t)` with the exponential midpoint rule:
/// each step applies `exp(-i H(t_k + dt/2) dt)`.
pub fn unitary_propagate<T: Real, H: OperatorFn<T> + ?Sized>(
    hamiltonian: &H,
    psi0: &StateVector<T>,
    grid: &TimeGrid<T>,
) -> Result<Vec<StateVector<T>>> {
    let dt = grid.dt();
    propagate_steps(psi0, dt, grid.steps(), |k| hamiltonian.at(grid.midpoint(k)))
}

/// Applies `exp(-i H_k dt)` for `k = 0..steps` where `step_hamiltonian(k)`
/// supplies the (midpoint) Hamiltonian of each step.
pub fn propagate_steps<T: Real, F>(
    psi0: &StateVector<T>,
    dt: T,
    steps: usize,
    mut step_hamiltonian: F,
) -> Result<Vec<StateVector<T>>>
where
    F: FnMut(usize) -> Result<HermitianOperator<T>>,
{
    let mut out = Vec::with_capacity(steps + 1);
    out.push(psi0.clone());
    let mut psi = psi0.amplitudes().clone();
    for k in 0..steps {
        let h = step_hamiltonian(k)?;
        if h.dim() != psi.len() {
            return Err(Error::Shape(format!(
                "Hamiltonian of dimension {} applied to state of dimension {}",
                h.dim(),
                psi.len()
            )));
        }
        let u = linalg::unitary_step(h.matrix(), dt);
        psi = u * psi;
        out.push(StateVector::from_unit(psi.clone()));
    }
    Ok(out)
}

/// Uniform coordinate grid `x_j = −L + j·dx`, `dx = 2L/N`, `j = 0..N`, with
/// zero Dirichlet values outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateGrid<T: Real> {
    half_width: T,
    points: usize,
}

impl<T: Real> CoordinateGrid<T> {
    pub fn new(half_width: T, points: usize) -> Result<Self> {
        if half_width <= T::zero() || points < 8 {
            return Err(Error::InvalidArgument(format!(
                "coordinate grid needs L > 0 and at least 8 points (L = {half_width}, N = {points})"
            )));
        }
        Ok(Self { half_width, points })
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> T {
        T::lit(2.0) * self.half_width / T::count(self.points)
    }

    pub fn x(&self, j: usize) -> T {
        -self.half_width + T::count(j) * self.dx()
    }

    pub fn xs(&self) -> Vec<T> {
        (0..self.points).map(|j| self.x(j)).collect()
    }

    /// `(Σ |v_j|² dx)^{1/2}`.
    pub fn norm(&self, v: &[Complex<T>]) -> T {
        (v.iter().fold(T::zero(), |a, z| a + z.norm_sqr()) * self.dx()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cis;

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        let g = TimeGrid::new(0.0, 2.0, 4).unwrap();
        assert_eq!(g.nodes(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.midpoint(1), 0.75);
    }

    #[test]
    fn constant_rhs_keeps_initial_value() {
        let g = TimeGrid::new(0.0, 3.0, 30).unwrap();
        let traj = integrate_ode(|_, _, d: &mut [f64]| d.fill(0.0), &[1.5, -2.0], &g).unwrap();
        assert_eq!(traj.len(), 31);
        assert!(traj.iter().all(|y| y == &vec![1.5, -2.0]));
    }

    #[test]
    fn exponential_decay() {
        let g = TimeGrid::new(0.0, 1.0, 1000).unwrap();
        let traj = integrate_ode(|_, y: &[f64], d: &mut [f64]| d[0] = -y[0], &[1.0], &g).unwrap();
        assert!((traj[1000][0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn divergence_reports_time() {
        let g = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let err = integrate_ode(
            |t: f64, _: &[f64], d: &mut [f64]| d[0] = if t > 0.5 { f64::NAN } else { 1.0 },
            &[0.0],
            &g,
        )
        .unwrap_err();
        match err {
            Error::Divergence { t } => assert!(t > 0.5 && t < 0.53),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn static_sigma_z_phase() {
        let g = TimeGrid::new(0.0, 2.0, 50).unwrap();
        let h = |_t: f64| Ok(HermitianOperator::pauli_z().scale(0.5));
        let psi0 = StateVector::basis(2, 0).unwrap();
        let traj = unitary_propagate(&h, &psi0, &g).unwrap();
        for (k, psi) in traj.iter().enumerate() {
            let expected = cis(-g.node(k) / 2.0);
            assert!((psi.amplitudes()[0] - expected).norm() < 1e-13);
            assert!(psi.amplitudes()[1].norm() < 1e-15);
        }
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let g = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let h = |_t: f64| Ok(HermitianOperator::zeros(3));
        let psi0 = StateVector::normalized(CVector::from_vec(vec![
            Complex::new(1.0, 0.0),
            Complex::new(0.0, 1.0),
            Complex::new(0.5, 0.5),
        ]))
        .unwrap();
        let traj = unitary_propagate(&h, &psi0, &g).unwrap();
        assert!((fidelity(&traj[10], &psi0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fidelity_examples() {
        let a = StateVector::<f64>::basis(2, 0).unwrap();
        let b = StateVector::basis(2, 1).unwrap();
        let s = 0.5f64.sqrt();
        let plus = StateVector::new(CVector::from_vec(vec![Complex::new(s, 0.0), Complex::new(s, 0.0)])).unwrap();
        assert_eq!(fidelity(&a, &a).unwrap(), 1.0);
        assert_eq!(fidelity(&a, &b).unwrap(), 0.0);
        assert!((fidelity(&a, &plus).unwrap() - 0.5).abs() < 1e-15);
        assert!(fidelity(&a, &StateVector::basis(3, 0).unwrap()).is_err());
    }

    #[test]
    fn rejects_unnormalized_state() {
        let v = CVector::from_vec(vec![Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)]);
        assert!(matches!(StateVector::<f64>::new(v), Err(Error::NotNormalized { .. })));
    }
}
