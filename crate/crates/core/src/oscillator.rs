//! Time-dependent harmonic oscillator driven through the Ermakov scale factor.
//!
//! Units `m = ħ = 1`. `H = p²/2 + ω²(t) x²/2` admits the invariant
//! `I = (b p − ḃ x)²/2 + ω0² (x/b)²/2` when `b̈ + ω² b = ω0²/b³`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::interp::{gauss_legendre, Quintic};
use crate::invariant::VerificationReport;
pub use crate::propagator::CoordinateGrid;
use crate::propagator::{rk4_step, TimeGrid};
use crate::scalar::{cis, imag_unit, Real};

/// Width of the coordinate box in units of the widest Gaussian.
pub const BOX_WIDTHS: f64 = 8.0;
/// Default number of coordinate points.
pub const DEFAULT_POINTS: usize = 1024;
/// Tolerance on `b̈ + ω² b` accepted by [`linear_invariant_check`], relative
/// to `max(1, |b|) · max(1, |ω²|)`.
pub const CLASSICAL_ODE_TOL: f64 = 1e-6;
/// Time step of the central differences in the operator checks, as a
/// fraction of the protocol duration.
pub const TIME_STEP_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
enum Shape<T: Real> {
    /// `b = 1 + a (10s³ − 15s⁴ + 6s⁵)`.
    Polynomial { amplitude: T },
    Sampled(Quintic<T>),
}

/// Scale factor `b(t) > 0` with its first two derivatives.
///
/// Values between nodes come from the closed form when available and from
/// quintic Hermite interpolation otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ErmakovSolution<T: Real> {
    grid: TimeGrid<T>,
    b: Vec<T>,
    bdot: Vec<T>,
    bddot: Vec<T>,
    omega0: T,
    shape: Shape<T>,
    /// `∫_{t0}^{t_k} ds / b²`.
    inv_b2: Vec<T>,
}

impl<T: Real> ErmakovSolution<T> {
    /// Node samples of `b`, `ḃ`, `b̈`; requires `b > 0` and `ω0 > 0`.
    pub fn from_samples(grid: TimeGrid<T>, b: Vec<T>, bdot: Vec<T>, bddot: Vec<T>, omega0: T) -> Result<Self> {
        if b.len() != grid.len() || bdot.len() != grid.len() || bddot.len() != grid.len() {
            return Err(Error::Shape("scale-factor samples must match the grid".into()));
        }
        if omega0 <= T::zero() {
            return Err(Error::Domain(format!("omega0 = {omega0} must be positive")));
        }
        if let Some(k) = b.iter().position(|&v| v <= T::zero() || !v.is_finite()) {
            return Err(Error::Domain(format!("b = {} at t = {} is not positive", b[k], grid.node(k))));
        }
        let q = Quintic::new(grid, b.clone(), bdot.clone(), bddot.clone());
        Ok(Self::assemble(grid, b, bdot, bddot, omega0, Shape::Sampled(q)))
    }

    fn assemble(grid: TimeGrid<T>, b: Vec<T>, bdot: Vec<T>, bddot: Vec<T>, omega0: T, shape: Shape<T>) -> Self {
        let mut sol = Self {
            grid,
            b,
            bdot,
            bddot,
            omega0,
            shape,
            inv_b2: Vec::new(),
        };
        let mut acc = T::zero();
        let mut cum = Vec::with_capacity(sol.grid.len());
        cum.push(acc);
        for k in 0..sol.grid.steps() {
            let (lo, hi) = (sol.grid.node(k), sol.grid.node(k + 1));
            acc += gauss_legendre(|t| sol.inverse_square(t), lo, hi, 1);
            cum.push(acc);
        }
        sol.inv_b2 = cum;
        sol
    }

    fn inverse_square(&self, t: T) -> T {
        let b = self.eval(t).0;
        T::one() / (b * b)
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn bdot(&self) -> &[T] {
        &self.bdot
    }

    pub fn bddot(&self) -> &[T] {
        &self.bddot
    }

    pub fn omega0(&self) -> T {
        self.omega0
    }

    /// Final frequency consistent with `b(t_f)`: `ω0 / b(t_f)²`.
    pub fn omegaf(&self) -> T {
        let bf = self.b[self.grid.steps()];
        self.omega0 / (bf * bf)
    }

    pub fn max_b(&self) -> T {
        self.b.iter().fold(T::zero(), |m, &v| m.max(v))
    }

    /// `(b, ḃ, b̈)` at any `t` in the grid span.
    pub fn eval(&self, t: T) -> (T, T, T) {
        match &self.shape {
            Shape::Polynomial { amplitude } => {
                let tf = self.grid.duration();
                let s = (t - self.grid.t0()) / tf;
                let one = T::one();
                let b = one + *amplitude * s * s * s * (T::lit(10.0) - T::lit(15.0) * s + T::lit(6.0) * s * s);
                let bd = *amplitude * T::lit(30.0) * s * s * (one - s) * (one - s) / tf;
                let bdd = *amplitude * T::lit(60.0) * s * (one - s) * (one - T::lit(2.0) * s) / (tf * tf);
                (b, bd, bdd)
            }
            Shape::Sampled(q) => q.eval(t),
        }
    }

    /// `ω²(t) = (−b̈ + ω0²/b³)/b`.
    pub fn omega_sq_at(&self, t: T) -> T {
        let (b, _, bdd) = self.eval(t);
        (-bdd + self.omega0 * self.omega0 / (b * b * b)) / b
    }

    /// Lewis-Riesenfeld phase of the ground state, `−(ω0/2) ∫ ds/b²`.
    pub fn alpha_at(&self, t: T) -> T {
        let h = self.grid.dt();
        let rel = ((t - self.grid.t0()) / h).max(T::zero());
        let k = rel.floor().to_usize().unwrap_or(0).min(self.grid.steps());
        let base = self.inv_b2[k];
        let tk = self.grid.node(k);
        let tail = if t > tk {
            gauss_legendre(|s| self.inverse_square(s), tk, t, 1)
        } else {
            T::zero()
        };
        -self.omega0 * T::lit(0.5) * (base + tail)
    }

    /// `ḃ = b̈ = 0` at both ends within `tol`.
    pub fn is_boundary_compliant(&self, tol: T) -> bool {
        let last = self.grid.steps();
        [0, last]
            .iter()
            .all(|&k| self.bdot[k].abs() <= tol && self.bddot[k].abs() <= tol)
    }

    /// `max_t |b̈ b³/ω0²|`, the relative departure of `ω²` from `ω0²/b⁴`.
    pub fn nonadiabaticity(&self) -> T {
        let w2 = self.omega0 * self.omega0;
        self.b
            .iter()
            .zip(&self.bddot)
            .fold(T::zero(), |m, (&b, &bdd)| m.max((bdd * b * b * b / w2).abs()))
    }
}

/// Scale factor `b = 1 + (√(ω0/ωf) − 1)(10s³ − 15s⁴ + 6s⁵)`.
pub fn polynomial_b<T: Real>(omega0: T, omegaf: T, grid: &TimeGrid<T>) -> Result<ErmakovSolution<T>> {
    if omega0 <= T::zero() || omegaf <= T::zero() {
        return Err(Error::Domain(format!(
            "frequencies must be positive (omega0 = {omega0}, omegaf = {omegaf})"
        )));
    }
    let amplitude = (omega0 / omegaf).sqrt() - T::one();
    let shape = Shape::Polynomial { amplitude };
    let probe = ErmakovSolution {
        grid: *grid,
        b: Vec::new(),
        bdot: Vec::new(),
        bddot: Vec::new(),
        omega0,
        shape: shape.clone(),
        inv_b2: Vec::new(),
    };
    let samples: Vec<(T, T, T)> = grid.nodes().into_iter().map(|t| probe.eval(t)).collect();
    Ok(ErmakovSolution::assemble(
        *grid,
        samples.iter().map(|s| s.0).collect(),
        samples.iter().map(|s| s.1).collect(),
        samples.iter().map(|s| s.2).collect(),
        omega0,
        shape,
    ))
}

/// Frequency schedule `ω²(t)` at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorProtocol<T: Real> {
    pub grid: TimeGrid<T>,
    pub omega_sq: Vec<T>,
    pub omega0: T,
    pub omegaf: T,
    pub min_omega_sq: T,
    /// `ω²` dips below zero somewhere (inverted trap); kept, never clipped.
    pub negative: bool,
}

impl<T: Real> OscillatorProtocol<T> {
    /// Largest relative mismatch of `ω²(t0)` with `ω0²` and `ω²(t_f)` with `ωf²`.
    pub fn endpoint_error(&self) -> T {
        let first = (self.omega_sq[0] / (self.omega0 * self.omega0) - T::one()).abs();
        let last = (self.omega_sq[self.grid.steps()] / (self.omegaf * self.omegaf) - T::one()).abs();
        first.max(last)
    }
}

/// `ω²(t) = (−b̈ + ω0²/b³)/b` at every node.
pub fn omega_from_b<T: Real>(sol: &ErmakovSolution<T>) -> Result<OscillatorProtocol<T>> {
    if let Some(k) = sol.b.iter().position(|&v| v <= T::zero()) {
        return Err(Error::Domain(format!("b = {} at t = {}", sol.b[k], sol.grid.node(k))));
    }
    let w2 = sol.omega0 * sol.omega0;
    let omega_sq: Vec<T> = sol
        .b
        .iter()
        .zip(&sol.bddot)
        .map(|(&b, &bdd)| (-bdd + w2 / (b * b * b)) / b)
        .collect();
    let min_omega_sq = omega_sq.iter().fold(omega_sq[0], |m, &v| m.min(v));
    Ok(OscillatorProtocol {
        grid: sol.grid,
        omega0: sol.omega0,
        omegaf: sol.omegaf(),
        negative: min_omega_sq < T::zero(),
        min_omega_sq,
        omega_sq,
    })
}

/// Integrates `b̈ = −ω²(t) b + ω0²/b³` with RK4 from `(b0, ḃ0)`.
pub fn ermakov_solve<T, F>(omega_sq: F, omega0: T, b0: T, bdot0: T, grid: &TimeGrid<T>) -> Result<ErmakovSolution<T>>
where
    T: Real,
    F: Fn(T) -> T,
{
    if b0 <= T::zero() {
        return Err(Error::Domain(format!("b0 = {b0} must be positive")));
    }
    let w2 = omega0 * omega0;
    let mut rhs = |t: T, y: &[T], out: &mut [T]| {
        out[0] = y[1];
        out[1] = -omega_sq(t) * y[0] + w2 / (y[0] * y[0] * y[0]);
    };
    let dt = grid.dt();
    let mut y = vec![b0, bdot0];
    let mut b = vec![b0];
    let mut bdot = vec![bdot0];
    for k in 0..grid.steps() {
        y = rk4_step(&mut rhs, grid.node(k), &y, dt);
        let t = grid.node(k + 1);
        if !(y[0] > T::zero()) || !y[1].is_finite() {
            return Err(Error::Collapse { t: t.as_f64() });
        }
        b.push(y[0]);
        bdot.push(y[1]);
    }
    let bddot = grid
        .nodes()
        .iter()
        .zip(&b)
        .map(|(&t, &bv)| -omega_sq(t) * bv + w2 / (bv * bv * bv))
        .collect();
    ErmakovSolution::from_samples(*grid, b, bdot, bddot, omega0)
}

type CVec<T> = Vec<Complex<T>>;

fn d1<T: Real>(v: &[Complex<T>], dx: T) -> CVec<T> {
    let n = v.len();
    let s = T::one() / (T::lit(2.0) * dx);
    let zero = Complex::new(T::zero(), T::zero());
    (0..n)
        .map(|j| {
            let right = if j + 1 < n { v[j + 1] } else { zero };
            let left = if j > 0 { v[j - 1] } else { zero };
            (right - left) * s
        })
        .collect()
}

fn d2<T: Real>(v: &[Complex<T>], dx: T) -> CVec<T> {
    let n = v.len();
    let s = T::one() / (dx * dx);
    let zero = Complex::new(T::zero(), T::zero());
    (0..n)
        .map(|j| {
            let right = if j + 1 < n { v[j + 1] } else { zero };
            let left = if j > 0 { v[j - 1] } else { zero };
            (right + left - v[j] * T::lit(2.0)) * s
        })
        .collect()
}

/// `p v = −i D1 v`.
fn momentum<T: Real>(v: &[Complex<T>], dx: T) -> CVec<T> {
    let mi = -imag_unit::<T>();
    d1(v, dx).into_iter().map(|z| z * mi).collect()
}

/// Grid with `L = 8 · max(b) / √ω0`, wide enough for every Gaussian along `sol`.
pub fn coordinate_grid<T: Real>(sol: &ErmakovSolution<T>, points: usize) -> Result<CoordinateGrid<T>> {
    CoordinateGrid::new(T::lit(BOX_WIDTHS) * sol.max_b() / sol.omega0.sqrt(), points)
}

/// Ground Gaussian of the invariant with its phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction<T: Real> {
    pub psi: Vec<Complex<T>>,
    pub alpha: T,
    pub warnings: Vec<String>,
}

/// `ψ(x,t) = e^{iα}(ω0/(π b²))^{1/4} exp[−(ω0/2)(1 − i bḃ/ω0)(x/b)²]` on `xg`.
pub fn ground_wavefunction<T: Real>(sol: &ErmakovSolution<T>, xg: &CoordinateGrid<T>, t: T) -> Wavefunction<T> {
    let mut warnings = Vec::new();
    if !sol.is_boundary_compliant(T::tol(1e-8)) {
        warnings.push("scale factor does not start and end at rest; endpoint states are not trap eigenstates".into());
    }
    let alpha = sol.alpha_at(t);
    Wavefunction {
        psi: gaussian_values(sol, xg, t, alpha),
        alpha,
        warnings,
    }
}

fn gaussian_values<T: Real>(sol: &ErmakovSolution<T>, xg: &CoordinateGrid<T>, t: T, alpha: T) -> CVec<T> {
    let (b, bd, _) = sol.eval(t);
    let w0 = sol.omega0;
    let amp = (w0 / (T::pi() * b * b)).sqrt().sqrt();
    let half = T::lit(0.5);
    // exponent coefficient: −(ω0/2b²) + i ḃ/(2b)
    let coef = Complex::new(-w0 * half / (b * b), bd * half / b);
    let phase = cis(alpha) * amp;
    xg.xs()
        .into_iter()
        .map(|x| {
            let z = coef * (x * x);
            cis(z.im) * z.re.exp() * phase
        })
        .collect()
}

/// Relative residual `‖(i∂t − H)ψ‖/‖ψ‖` of the analytic Gaussian, with a
/// central difference of step `dt` in time and second-order differences in x.
pub fn schrodinger_residual<T: Real>(sol: &ErmakovSolution<T>, xg: &CoordinateGrid<T>, t: T, dt: T) -> Result<T> {
    let (lo, hi) = (sol.grid.t0(), sol.grid.tf());
    if t - dt < lo || t + dt > hi {
        return Err(Error::InvalidArgument(format!("t = {t} ± {dt} leaves the protocol span")));
    }
    let psi = ground_wavefunction(sol, xg, t).psi;
    let plus = ground_wavefunction(sol, xg, t + dt).psi;
    let minus = ground_wavefunction(sol, xg, t - dt).psi;
    let dx = xg.dx();
    let w2 = sol.omega_sq_at(t);
    let lap = d2(&psi, dx);
    let i = imag_unit::<T>();
    let s = T::one() / (T::lit(2.0) * dt);
    let half = T::lit(0.5);
    let residual: CVec<T> = (0..psi.len())
        .map(|j| {
            let x = xg.x(j);
            let dpsi = (plus[j] - minus[j]) * s;
            let h = -lap[j] * half + psi[j] * (half * w2 * x * x);
            i * dpsi - h
        })
        .collect();
    Ok(xg.norm(&residual) / xg.norm(&psi))
}

/// `⟨ψ|I|ψ⟩` for the analytic ground Gaussian, by quadrature with the
/// analytic derivative.
pub fn invariant_expectation<T: Real>(sol: &ErmakovSolution<T>, xg: &CoordinateGrid<T>, t: T) -> T {
    let (b, bd, _) = sol.eval(t);
    let w0 = sol.omega0;
    let psi = gaussian_values(sol, xg, t, T::zero());
    let half = T::lit(0.5);
    let coef = Complex::new(-w0 / (b * b), bd / b);
    let i = imag_unit::<T>();
    let mut kinetic = T::zero();
    let mut potential = T::zero();
    let mut weight = T::zero();
    for (j, z) in psi.iter().enumerate() {
        let x = xg.x(j);
        let dpsi = coef * x * *z;
        // (b p − ḃ x)ψ = −i b ψ' − ḃ x ψ
        let q = -i * dpsi * b - *z * (bd * x);
        kinetic += q.norm_sqr();
        potential += z.norm_sqr() * x * x;
        weight += z.norm_sqr();
    }
    (half * kinetic + half * w0 * w0 * potential / (b * b)) / weight
}

/// `⟨ψ|I(t)|ψ⟩/⟨ψ|ψ⟩` for arbitrary grid samples, with central differences.
pub fn grid_invariant_expectation<T: Real>(
    sol: &ErmakovSolution<T>,
    xg: &CoordinateGrid<T>,
    t: T,
    psi: &[Complex<T>],
) -> T {
    let (b, bd, _) = sol.eval(t);
    let w0 = sol.omega0;
    let half = T::lit(0.5);
    let p = momentum(psi, xg.dx());
    let mut kinetic = T::zero();
    let mut potential = T::zero();
    let mut weight = T::zero();
    for (j, z) in psi.iter().enumerate() {
        let x = xg.x(j);
        kinetic += (p[j] * b - *z * (bd * x)).norm_sqr();
        potential += z.norm_sqr() * x * x;
        weight += z.norm_sqr();
    }
    (half * kinetic + half * w0 * w0 * potential / (b * b)) / weight
}

/// Crank-Nicolson propagation of `psi0` under `p²/2 + ω²(t)x²/2`, with `ω²`
/// taken at each step's midpoint. Returns the state at every node.
pub fn propagate_crank_nicolson<T, F>(
    omega_sq: F,
    psi0: &[Complex<T>],
    xg: &CoordinateGrid<T>,
    grid: &TimeGrid<T>,
) -> Result<Vec<CVec<T>>>
where
    T: Real,
    F: Fn(T) -> T,
{
    let n = xg.points();
    if psi0.len() != n {
        return Err(Error::Shape(format!("{} samples on a {n}-point grid", psi0.len())));
    }
    let dx = xg.dx();
    let dt = grid.dt();
    let half = T::lit(0.5);
    let i = imag_unit::<T>();
    let kin = T::one() / (dx * dx);
    let off = -half * kin;
    // (1 + i dt/2 H) ψ' = (1 − i dt/2 H) ψ
    let a_off = i * (half * dt * off);
    let mut out = Vec::with_capacity(grid.len());
    out.push(psi0.to_vec());
    let mut psi = psi0.to_vec();
    let mut c_prime = vec![Complex::new(T::zero(), T::zero()); n];
    let mut d_prime = vec![Complex::new(T::zero(), T::zero()); n];
    for k in 0..grid.steps() {
        let w2 = omega_sq(grid.midpoint(k));
        let diag = |j: usize| kin + half * w2 * xg.x(j) * xg.x(j);
        let rhs: CVec<T> = (0..n)
            .map(|j| {
                let mut hv = psi[j] * diag(j);
                if j > 0 {
                    hv += psi[j - 1] * off;
                }
                if j + 1 < n {
                    hv += psi[j + 1] * off;
                }
                psi[j] - i * hv * (half * dt)
            })
            .collect();
        // Thomas algorithm with constant off-diagonals
        let a_diag = |j: usize| Complex::new(T::one(), T::zero()) + i * (half * dt * diag(j));
        c_prime[0] = a_off / a_diag(0);
        d_prime[0] = rhs[0] / a_diag(0);
        for j in 1..n {
            let m = a_diag(j) - a_off * c_prime[j - 1];
            c_prime[j] = a_off / m;
            d_prime[j] = (rhs[j] - a_off * d_prime[j - 1]) / m;
        }
        psi[n - 1] = d_prime[n - 1];
        for j in (0..n - 1).rev() {
            psi[j] = d_prime[j] - c_prime[j] * psi[j + 1];
        }
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Divergence {
                t: grid.node(k + 1).as_f64(),
            });
        }
        out.push(psi.clone());
    }
    Ok(out)
}

/// Result of [`linear_invariant_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearInvariantCheck<T: Real> {
    /// `max_t ‖(i İ − [H, I]) g‖/‖g‖` over interior nodes for a fixed test function `g`.
    pub residual: T,
    /// `max_t |b̈ + ω² b|` with `b̈` from a central difference of `ḃ`.
    pub ode_residual: T,
    /// `ω²` vanishes at both ends, the only case where `ḃ = b̈ = 0` is possible there.
    pub boundary_compatible: bool,
    pub warnings: Vec<String>,
}

/// Checks `I = b p − ḃ x` against `H = p²/2 + ω² x²/2` on `xg`.
///
/// Requires `b̈ = −ω² b`; rejects `b ≡ 0`.
pub fn linear_invariant_check<T, B, D, W>(
    b: B,
    bdot: D,
    omega_sq: W,
    grid: &TimeGrid<T>,
    xg: &CoordinateGrid<T>,
) -> Result<LinearInvariantCheck<T>>
where
    T: Real,
    B: Fn(T) -> T,
    D: Fn(T) -> T,
    W: Fn(T) -> T,
{
    let nodes = grid.nodes();
    let bmax = nodes.iter().fold(T::zero(), |m, &t| m.max(b(t).abs().max(bdot(t).abs())));
    if bmax == T::zero() {
        return Err(Error::InvalidArgument("b vanishes identically; the linear invariant is zero".into()));
    }
    let delta = grid.duration() * T::lit(TIME_STEP_FRACTION);
    let two_delta = T::lit(2.0) * delta;
    let mut ode_residual = T::zero();
    let mut scale = T::one();
    for &t in &nodes[1..nodes.len() - 1] {
        let bdd = (bdot(t + delta) - bdot(t - delta)) / two_delta;
        let w2 = omega_sq(t);
        ode_residual = ode_residual.max((bdd + w2 * b(t)).abs());
        scale = scale.max(b(t).abs().max(T::one()) * w2.abs().max(T::one()));
    }
    if ode_residual > T::lit(CLASSICAL_ODE_TOL) * scale {
        return Err(Error::InvalidArgument(format!(
            "b does not solve b'' = -omega^2 b (residual {:.3e})",
            ode_residual.as_f64()
        )));
    }
    let dx = xg.dx();
    let xs = xg.xs();
    let w = xg.half_width() / T::lit(10.0);
    let g = test_function(&xs, w / T::lit(2.0), w);
    let apply_i = |t: T, v: &[Complex<T>]| -> CVec<T> {
        let p = momentum(v, dx);
        let (bv, bd) = (b(t), bdot(t));
        p.iter()
            .zip(v)
            .zip(&xs)
            .map(|((pz, z), &x)| *pz * bv - *z * (bd * x))
            .collect()
    };
    let apply_h = |t: T, v: &[Complex<T>]| -> CVec<T> {
        let w2 = omega_sq(t);
        quadratic_hamiltonian(v, &xs, dx, w2, T::zero())
    };
    let residual = pair_residual(&nodes[1..nodes.len() - 1], delta, &g, xg, apply_h, apply_i);
    let tol = T::tol(1e-10) * scale;
    let boundary_compatible = omega_sq(grid.t0()).abs() <= tol && omega_sq(grid.tf()).abs() <= tol;
    let mut warnings = Vec::new();
    if !boundary_compatible {
        warnings.push(
            "omega does not vanish at the ends, so b cannot satisfy bdot = bddot = 0 there".to_string(),
        );
    }
    Ok(LinearInvariantCheck {
        residual,
        ode_residual,
        boundary_compatible,
        warnings,
    })
}

/// `p²/2 − F x + ω² x²/2` applied to `v`.
fn quadratic_hamiltonian<T: Real>(v: &[Complex<T>], xs: &[T], dx: T, w2: T, force: T) -> CVec<T> {
    let half = T::lit(0.5);
    d2(v, dx)
        .iter()
        .zip(v)
        .zip(xs)
        .map(|((l, z), &x)| -*l * half + *z * (half * w2 * x * x - force * x))
        .collect()
}

/// Gaussian envelope with a linear complex factor so both parities enter.
fn test_function<T: Real>(xs: &[T], center: T, width: T) -> CVec<T> {
    let half = T::lit(0.5);
    xs.iter()
        .map(|&x| {
            let y = (x - center) / width;
            Complex::new(T::one(), T::lit(0.3) * y) * (-half * y * y).exp()
        })
        .collect()
}

/// `max_t ‖(i İ − [H, I]) g‖/‖g‖`, `İ` by a central difference of step `delta`.
fn pair_residual<T, H, I>(times: &[T], delta: T, g: &[Complex<T>], xg: &CoordinateGrid<T>, apply_h: H, apply_i: I) -> T
where
    T: Real,
    H: Fn(T, &[Complex<T>]) -> CVec<T>,
    I: Fn(T, &[Complex<T>]) -> CVec<T>,
{
    let i = imag_unit::<T>();
    let gnorm = xg.norm(g);
    let s = T::one() / (T::lit(2.0) * delta);
    let mut worst = T::zero();
    for &t in times {
        let ig = apply_i(t, g);
        let hig = apply_h(t, &ig);
        let hg = apply_h(t, g);
        let ihg = apply_i(t, &hg);
        let up = apply_i(t + delta, g);
        let down = apply_i(t - delta, g);
        let r: CVec<T> = (0..g.len())
            .map(|j| i * (up[j] - down[j]) * s - (hig[j] - ihg[j]))
            .collect();
        worst = worst.max(xg.norm(&r) / gnorm);
    }
    worst
}

/// Checks the forced, scale-invariant pair
/// `H = p²/2 − F x + ω² x²/2 + U((x − x_c)/b)/b²` and
/// `I = [b(p − ẋ_c) − ḃ(x − x_c)]²/2 + ω0²((x − x_c)/b)²/2 + U((x − x_c)/b)`
/// with `ẍ_c + ω² x_c = F` integrated on the solution grid.
///
/// `residual_max` is the worst relative residual over interior nodes for a
/// Gaussian test function following the trap.
pub fn generalized_pair_check<T, F, U>(
    force: F,
    potential: U,
    sol: &ErmakovSolution<T>,
    xc0: T,
    xcdot0: T,
    xg: &CoordinateGrid<T>,
) -> Result<VerificationReport>
where
    T: Real,
    F: Fn(T) -> T,
    U: Fn(T) -> T,
{
    let grid = sol.grid;
    let mut rhs = |t: T, y: &[T], out: &mut [T]| {
        out[0] = y[1];
        out[1] = force(t) - sol.omega_sq_at(t) * y[0];
    };
    let mut y = vec![xc0, xcdot0];
    let mut xc = vec![xc0];
    let mut xcd = vec![xcdot0];
    for k in 0..grid.steps() {
        y = rk4_step(&mut rhs, grid.node(k), &y, grid.dt());
        if !y[0].is_finite() || !y[1].is_finite() {
            return Err(Error::Divergence {
                t: grid.node(k + 1).as_f64(),
            });
        }
        xc.push(y[0]);
        xcd.push(y[1]);
    }
    let nodes = grid.nodes();
    let xcdd: Vec<T> = nodes
        .iter()
        .zip(&xc)
        .map(|(&t, &x)| force(t) - sol.omega_sq_at(t) * x)
        .collect();
    let centre = Quintic::new(grid, xc.clone(), xcd, xcdd);
    let dx = xg.dx();
    let xs = xg.xs();
    let w0 = sol.omega0;
    let half = T::lit(0.5);
    let apply_i = |t: T, v: &[Complex<T>]| -> CVec<T> {
        let (b, bd, _) = sol.eval(t);
        let (c, cd, _) = centre.eval(t);
        let q = |u: &[Complex<T>]| -> CVec<T> {
            let p = momentum(u, dx);
            p.iter()
                .zip(u)
                .zip(&xs)
                .map(|((pz, z), &x)| (*pz - *z * cd) * b - *z * (bd * (x - c)))
                .collect()
        };
        let qq = q(&q(v));
        qq.iter()
            .zip(v)
            .zip(&xs)
            .map(|((a, z), &x)| {
                let yv = (x - c) / b;
                *a * half + *z * (half * w0 * w0 * yv * yv + potential(yv))
            })
            .collect()
    };
    let apply_h = |t: T, v: &[Complex<T>]| -> CVec<T> {
        let (b, _, _) = sol.eval(t);
        let (c, _, _) = centre.eval(t);
        let base = quadratic_hamiltonian(v, &xs, dx, sol.omega_sq_at(t), force(t));
        base.iter()
            .zip(v)
            .zip(&xs)
            .map(|((h, z), &x)| *h + *z * (potential((x - c) / b) / (b * b)))
            .collect()
    };
    let delta = grid.duration() * T::lit(TIME_STEP_FRACTION);
    let mut worst = T::zero();
    for &t in &nodes[1..nodes.len() - 1] {
        let (b, _, _) = sol.eval(t);
        let (c, _, _) = centre.eval(t);
        let g = test_function(&xs, c, b / w0.sqrt());
        worst = worst.max(pair_residual(&[t], delta, &g, xg, apply_h, apply_i));
    }
    let mut report = VerificationReport::empty();
    report.residual_max = worst.as_f64();
    report.boundary_ok = sol.is_boundary_compliant(T::tol(1e-8));
    let edge = xc.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if edge + T::lit(4.0) * sol.max_b() / w0.sqrt() > xg.half_width() {
        report
            .warnings
            .push("trap centre approaches the coordinate box edge".to_string());
    }
    Ok(report)
}
