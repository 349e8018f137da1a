//! Dynamical-invariant machinery: the `i dI/dt = [H, I]` residual, the
//! coefficient-space field equation and its inverse, endpoint commutation,
//! eigenvalue tracking, Lewis-Riesenfeld phases and the adiabatic-state
//! superposition built from them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd;
use crate::linalg::{self, CVector};
use crate::operator::{commutator, BasisSet, HermitianOperator, StructureConstants};
use crate::operator::structure_constants;
use crate::propagator::{propagate_steps, OperatorFn, StateVector, TimeGrid};
use crate::scalar::{argument, c, cis, imag_unit, modulus, Real};

/// Gap below which two invariant (or Hamiltonian) levels count as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-8;
/// Absolute tolerance on endpoint derivatives when the schedule is checked
/// against one-sided finite differences (scaled by the schedule magnitude).
pub const ENDPOINT_DERIVATIVE_TOL: f64 = 1e-6;
/// `|| [H, I] ||_HS <= BOUNDARY_COMMUTATOR_TOL ||H|| ||I||` at both ends.
pub const BOUNDARY_COMMUTATOR_TOL: f64 = 1e-9;
/// `|b_dot_mu| <=` this at both ends.
pub const BOUNDARY_RATE_TOL: f64 = 1e-8;
/// Default relative consistency tolerance of [`solve_fields`].
pub const FIELD_CONSISTENCY_TOL: f64 = 1e-6;
/// Imaginary part of the phase integrand above which [`lr_phase`] fails.
pub const PHASE_IMAG_TOL: f64 = 1e-6;

const LSTSQ_RCOND: f64 = 1e-10;

/// Endpoint derivative data attached to a [`Schedule`], one vector per end
/// (`[at t0, at tf]`), each with one entry per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointDerivatives<T: Real> {
    pub first: [Vec<T>; 2],
    pub second: Option<[Vec<T>; 2]>,
}

/// Multi-channel real trajectory on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule<T: Real> {
    grid: TimeGrid<T>,
    values: Vec<Vec<T>>,
    endpoints: Option<EndpointDerivatives<T>>,
}

impl<T: Real> Schedule<T> {
    /// `values[k]` holds the channels at node `k`.
    ///
    /// Reported endpoint derivatives are compared with one-sided finite
    /// differences; the comparison allows `1e-6` times the schedule's rate
    /// scale plus the stencil's own truncation estimate.
    pub fn new(
        grid: TimeGrid<T>,
        values: Vec<Vec<T>>,
        endpoints: Option<EndpointDerivatives<T>>,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        let channels = values[0].len();
        if channels == 0 {
            return Err(Error::Shape("schedule needs at least one channel".into()));
        }
        if let Some(k) = values.iter().position(|v| v.len() != channels) {
            return Err(Error::Shape(format!(
                "node {k} has {} channels, expected {channels}",
                values[k].len()
            )));
        }
        let sched = Self {
            grid,
            values,
            endpoints,
        };
        if let Some(ep) = &sched.endpoints {
            sched.validate_endpoints(ep)?;
        }
        Ok(sched)
    }

    /// Samples `f` at every node.
    pub fn from_fn<F>(grid: TimeGrid<T>, f: F, endpoints: Option<EndpointDerivatives<T>>) -> Result<Self>
    where
        F: Fn(T) -> Vec<T>,
    {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, values, endpoints)
    }

    fn validate_endpoints(&self, ep: &EndpointDerivatives<T>) -> Result<()> {
        let ch = self.channels();
        let lens_ok = ep.first.iter().all(|v| v.len() == ch)
            && ep
                .second
                .as_ref()
                .is_none_or(|s| s.iter().all(|v| v.len() == ch));
        if !lens_ok {
            return Err(Error::Shape("endpoint derivative length differs from channel count".into()));
        }
        if self.grid.len() < 5 {
            return Ok(());
        }
        let h = self.grid.dt();
        for c in 0..ch {
            let y = self.channel(c);
            let mag = y.iter().fold(T::one(), |m, v| if v.abs() > m { v.abs() } else { m });
            let rate_scale = mag / self.grid.duration();
            for (end, forward) in [(0usize, true), (1usize, false)] {
                let (lo, hi) = fd::endpoint_first(&y, h, forward);
                let allowed = T::lit(ENDPOINT_DERIVATIVE_TOL) * rate_scale + (lo - hi).abs();
                let dev = (ep.first[end][c] - hi).abs();
                if dev > allowed {
                    return Err(Error::InvalidArgument(format!(
                        "reported first derivative {} of channel {c} at {} disagrees with finite difference {} by {:.3e}",
                        ep.first[end][c],
                        if forward { "t0" } else { "tf" },
                        hi,
                        dev.as_f64()
                    )));
                }
                if let Some(second) = &ep.second {
                    let (lo, hi) = fd::endpoint_second(&y, h, forward);
                    let allowed = T::lit(ENDPOINT_DERIVATIVE_TOL) * rate_scale / self.grid.duration()
                        + (lo - hi).abs();
                    let dev = (second[end][c] - hi).abs();
                    if dev > allowed {
                        return Err(Error::InvalidArgument(format!(
                            "reported second derivative {} of channel {c} at {} disagrees with finite difference {} by {:.3e}",
                            second[end][c],
                            if forward { "t0" } else { "tf" },
                            hi,
                            dev.as_f64()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.values[0].len()
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    pub fn at(&self, k: usize) -> &[T] {
        &self.values[k]
    }

    pub fn channel(&self, c: usize) -> Vec<T> {
        self.values.iter().map(|v| v[c]).collect()
    }

    pub fn endpoints(&self) -> Option<&EndpointDerivatives<T>> {
        self.endpoints.as_ref()
    }

    /// Node-wise time derivative by second-order finite differences.
    pub fn derivative(&self) -> Vec<Vec<T>> {
        let samples: Vec<DVector<T>> = self
            .values
            .iter()
            .map(|v| DVector::from_column_slice(v))
            .collect();
        fd::derivative(&samples, self.grid.dt())
            .into_iter()
            .map(|v| v.as_slice().to_vec())
            .collect()
    }

    /// First derivative at `[t0, tf]`: reported data when present, otherwise
    /// one-sided finite differences.
    pub fn endpoint_rates(&self) -> [Vec<T>; 2] {
        if let Some(ep) = &self.endpoints {
            return ep.first.clone();
        }
        let d = self.derivative();
        [d[0].clone(), d[d.len() - 1].clone()]
    }

    /// Second derivative at `[t0, tf]`, reported or estimated.
    pub fn endpoint_accelerations(&self) -> [Vec<T>; 2] {
        if let Some(s) = self.endpoints.as_ref().and_then(|e| e.second.clone()) {
            return s;
        }
        let h = self.grid.dt();
        let per_end = |forward: bool| -> Vec<T> {
            (0..self.channels())
                .map(|c| fd::endpoint_second(&self.channel(c), h, forward).1)
                .collect()
        };
        [per_end(true), per_end(false)]
    }
}

/// Hamiltonian and invariant coefficient schedules over one basis.
#[derive(Debug, Clone)]
pub struct ProtocolPair<T: Real> {
    basis: BasisSet<T>,
    h_coeffs: Schedule<T>,
    b_coeffs: Schedule<T>,
}

impl<T: Real> ProtocolPair<T> {
    pub fn new(basis: BasisSet<T>, h_coeffs: Schedule<T>, b_coeffs: Schedule<T>) -> Result<Self> {
        if h_coeffs.grid() != b_coeffs.grid() {
            return Err(Error::Shape("Hamiltonian and invariant schedules use different grids".into()));
        }
        if h_coeffs.channels() != basis.len() || b_coeffs.channels() != basis.len() {
            return Err(Error::Shape(format!(
                "basis has {} elements but schedules carry {} and {} channels",
                basis.len(),
                h_coeffs.channels(),
                b_coeffs.channels()
            )));
        }
        Ok(Self {
            basis,
            h_coeffs,
            b_coeffs,
        })
    }

    pub fn basis(&self) -> &BasisSet<T> {
        &self.basis
    }

    pub fn h_coeffs(&self) -> &Schedule<T> {
        &self.h_coeffs
    }

    pub fn b_coeffs(&self) -> &Schedule<T> {
        &self.b_coeffs
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.h_coeffs.grid()
    }

    pub fn hamiltonian(&self, k: usize) -> Result<HermitianOperator<T>> {
        self.basis.reconstruct(self.h_coeffs.at(k))
    }

    pub fn invariant(&self, k: usize) -> Result<HermitianOperator<T>> {
        self.basis.reconstruct(self.b_coeffs.at(k))
    }
}

/// Diagnostics of one verification run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub residual_max: f64,
    pub eigenvalue_drift_max: f64,
    pub fidelity_min: f64,
    pub phase_error: f64,
    pub boundary_ok: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl VerificationReport {
    /// An all-clear report to be filled in by the caller.
    pub fn empty() -> Self {
        Self {
            residual_max: 0.0,
            eigenvalue_drift_max: 0.0,
            fidelity_min: 1.0,
            phase_error: 0.0,
            boundary_ok: true,
            warnings: Vec::new(),
        }
    }
}

/// Verifies a pair known only at its grid nodes.
///
/// `residual_max` is `max_k |ḃ − f·h·b|` with `ḃ` from second-order differences
/// of the samples. The state starts in eigenstate `level` of `I(t0)`. With an
/// even number of steps the odd nodes serve as exact midpoints and the state
/// is propagated over half the steps; otherwise each step uses the mean of its
/// two end Hamiltonians.
pub fn verify_pair<T: Real>(pair: &ProtocolPair<T>, level: usize) -> Result<VerificationReport> {
    verify_pair_with_precision(pair, level, T::default_epsilon())
}

/// [`verify_pair`] for samples of relative precision `rel_precision`; only the
/// boundary check depends on it (see [`boundary_check_with_precision`]).
pub fn verify_pair_with_precision<T: Real>(
    pair: &ProtocolPair<T>,
    level: usize,
    rel_precision: T,
) -> Result<VerificationReport> {
    let grid = pair.grid();
    if level >= pair.basis().dim() {
        return Err(Error::InvalidArgument(format!(
            "level {level} out of range for dimension {}",
            pair.basis().dim()
        )));
    }
    let f = structure_constants(pair.basis())?;
    let bdot = pair.b_coeffs().derivative();
    let mut residual = T::zero();
    for (k, rate) in bdot.iter().enumerate() {
        let rhs = coefficient_rhs(&f, pair.h_coeffs().at(k), pair.b_coeffs().at(k))?;
        for (a, b) in rate.iter().zip(&rhs) {
            residual = residual.max((*a - *b).abs());
        }
    }
    let steps = grid.steps();
    let paired = steps.is_multiple_of(2);
    let (prop_grid, stride) = if paired {
        (grid.with_steps(steps / 2)?, 2)
    } else {
        (*grid, 1)
    };
    let track = eigentrack_nodes(&prop_grid, |k| pair.invariant(k * stride))?;
    let phi = track.branch(level);
    let psi0 = StateVector::normalized(phi[0].clone())?;
    let psi = propagate_steps(&psi0, prop_grid.dt(), prop_grid.steps(), |k| {
        if paired {
            pair.hamiltonian(2 * k + 1)
        } else {
            Ok((pair.hamiltonian(k)? + pair.hamiltonian(k + 1)?) * T::lit(0.5))
        }
    })?;
    let fidelity_min = phi
        .iter()
        .zip(&psi)
        .map(|(p, s)| linalg::inner(p, s.amplitudes()).norm_sqr())
        .fold(T::one(), |m, v| m.min(v));
    let hs = (0..prop_grid.len())
        .map(|k| pair.hamiltonian(k * stride))
        .collect::<Result<Vec<_>>>()?;
    let mut warnings = track.warnings.clone();
    let phase_error = match lr_phase_nodes(&hs, &phi, &prop_grid) {
        Ok(trace) => phase_mismatch(&phi, &psi, &trace.alpha).as_f64(),
        Err(e) => {
            warnings.push(format!("phase reconstruction skipped: {e}"));
            f64::NAN
        }
    };
    let boundary = boundary_check_with_precision(pair, rel_precision)?;
    warnings.extend(boundary.offending.iter().map(|o| format!("boundary condition violated: {o}")));
    Ok(VerificationReport {
        residual_max: residual.as_f64(),
        eigenvalue_drift_max: track.drift_max.as_f64(),
        fidelity_min: fidelity_min.as_f64(),
        phase_error,
        boundary_ok: boundary.ok,
        warnings,
    })
}

/// `max_k || i dI/dt - [H, I] ||_HS` over the grid nodes.
///
/// `dI/dt` uses central differences with step `dt/10` (one-sided second order
/// at the two ends so `I` is never evaluated outside the grid span).
pub fn invariant_residual<T, H, I>(hamiltonian: &H, invariant: &I, grid: &TimeGrid<T>) -> Result<T>
where
    T: Real,
    H: OperatorFn<T> + ?Sized,
    I: OperatorFn<T> + ?Sized,
{
    let step = grid.dt() / T::lit(10.0);
    let i = imag_unit::<T>();
    let mut worst = T::zero();
    for t in grid.nodes() {
        let h = hamiltonian.at(t)?;
        let inv = invariant.at(t)?;
        let didt = invariant_rate(invariant, t, step, grid)?;
        let comm = commutator(&h, &inv)?;
        let r = linalg::frobenius(&(didt.matrix().map(|z| z * i) - comm.matrix()));
        if r > worst {
            worst = r;
        }
    }
    Ok(worst)
}

fn invariant_rate<T: Real, I: OperatorFn<T> + ?Sized>(
    invariant: &I,
    t: T,
    step: T,
    grid: &TimeGrid<T>,
) -> Result<HermitianOperator<T>> {
    // evaluate eagerly so errors surface instead of panicking inside fd
    let (lo, hi) = (grid.t0(), grid.tf());
    let pts: Vec<T> = if t - step >= lo && t + step <= hi {
        vec![t - step, t + step]
    } else if t - step < lo {
        vec![t, t + step, t + step + step]
    } else {
        vec![t - step - step, t - step, t]
    };
    let ops = pts
        .iter()
        .map(|&s| invariant.at(s))
        .collect::<Result<Vec<_>>>()?;
    let lookup = |s: T| -> HermitianOperator<T> {
        let idx = pts.iter().position(|&p| p == s).expect("stencil point evaluated");
        ops[idx].clone()
    };
    Ok(fd::derivative_at(&lookup, t, step, lo, hi))
}

/// `b_dot_mu = sum_{nu, lambda} f_{mu nu lambda} h_nu b_lambda`.
pub fn coefficient_rhs<T: Real>(f: &StructureConstants<T>, h: &[T], b: &[T]) -> Result<Vec<T>> {
    if h.len() != f.len() || b.len() != f.len() {
        return Err(Error::Shape(format!(
            "structure constants of size {} with h of length {} and b of length {}",
            f.len(),
            h.len(),
            b.len()
        )));
    }
    let mut out = vec![T::zero(); f.len()];
    for &(mu, nu, lambda, v) in f.entries() {
        out[mu] += v * h[nu] * b[lambda];
    }
    Ok(out)
}

/// `A[b]_{mu nu} = sum_lambda f_{mu nu lambda} b_lambda`, so `A[b] h = b_dot`.
pub fn field_matrix<T: Real>(f: &StructureConstants<T>, b: &[T]) -> DMatrix<T> {
    let k = f.len();
    let mut a = DMatrix::zeros(k, k);
    for &(mu, nu, lambda, v) in f.entries() {
        a[(mu, nu)] += v * b[lambda];
    }
    a
}

/// Hamiltonian coefficients recovered from an invariant schedule.
#[derive(Debug, Clone)]
pub struct FieldSolution<T: Real> {
    pub h: Schedule<T>,
    /// `|| A[b] h - b_dot ||` per node.
    pub residuals: Vec<T>,
    /// Numerical rank of `A[b]` per node.
    pub ranks: Vec<usize>,
}

/// Solves `A[b(t)] h(t) = b_dot(t)` node by node in the minimum-norm
/// least-squares sense.
///
/// `b_dot` comes from second-order finite differences of the schedule. A node
/// whose residual exceeds `tolerance * max(1, max_k |b_dot_k|)` means the
/// schedule is not reachable with this basis and yields
/// [`Error::Inconsistent`].
pub fn solve_fields<T: Real>(
    f: &StructureConstants<T>,
    b: &Schedule<T>,
    tolerance: T,
) -> Result<FieldSolution<T>> {
    solve_fields_with(f, b, tolerance, None::<fn(usize, T) -> Vec<T>>)
}

/// [`solve_fields`] plus a caller-supplied component `extra(k, t_k)` that is
/// projected onto the null space of `A[b(t_k)]` before being added, so the
/// result remains a solution (for instance a field along the invariant axis).
pub fn solve_fields_with<T, G>(
    f: &StructureConstants<T>,
    b: &Schedule<T>,
    tolerance: T,
    extra: Option<G>,
) -> Result<FieldSolution<T>>
where
    T: Real,
    G: Fn(usize, T) -> Vec<T>,
{
    if b.channels() < 2 {
        return Err(Error::InvalidArgument("invariant schedule needs at least two channels".into()));
    }
    if b.channels() != f.len() {
        return Err(Error::Shape(format!(
            "schedule has {} channels, structure constants {}",
            b.channels(),
            f.len()
        )));
    }
    let grid = *b.grid();
    let rates = b.derivative();
    let scale = rates.iter().fold(T::one(), |m, r| {
        let n = r.iter().fold(T::zero(), |a, v| a + *v * *v).sqrt();
        if n > m {
            n
        } else {
            m
        }
    });
    let rcond = T::tol(LSTSQ_RCOND);
    let mut h_values = Vec::with_capacity(grid.len());
    let mut residuals = Vec::with_capacity(grid.len());
    let mut ranks = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let a = field_matrix(f, b.at(k));
        let rhs = DVector::from_column_slice(&rates[k]);
        let (mut h, rank) = linalg::min_norm_lstsq(&a, &rhs, rcond);
        let residual = (&a * &h - &rhs).norm();
        if residual > tolerance * scale {
            return Err(Error::Inconsistent {
                node: k,
                t: grid.node(k).as_f64(),
                residual: residual.as_f64(),
                tolerance: (tolerance * scale).as_f64(),
            });
        }
        if let Some(g) = &extra {
            let v = DVector::from_vec(g(k, grid.node(k)));
            if v.len() != h.len() {
                return Err(Error::Shape("null-space component has wrong length".into()));
            }
            h += linalg::null_space_projector(&a, rcond) * v;
        }
        h_values.push(h.as_slice().to_vec());
        residuals.push(residual);
        ranks.push(rank);
    }
    Ok(FieldSolution {
        h: Schedule::new(grid, h_values, None)?,
        residuals,
        ranks,
    })
}

/// Outcome of an endpoint-commutation check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCheck {
    pub ok: bool,
    /// Offending quantities, e.g. `"[H,I]@t0"` or `"bdot[2]@tf"`.
    pub offending: Vec<String>,
}

/// Checks `[H(0), I(0)] = [H(tf), I(tf)] = 0` and `b_dot(0) = b_dot(tf) = 0`.
///
/// Samples are taken as exact up to machine precision; see
/// [`boundary_check_with_precision`].
pub fn boundary_check<T: Real>(pair: &ProtocolPair<T>) -> Result<BoundaryCheck> {
    boundary_check_with_precision(pair, T::default_epsilon())
}

/// [`boundary_check`] for samples carrying relative error `rel_precision`
/// (for instance `5e-12` for twelve significant digits).
///
/// Reported endpoint rates are held to [`BOUNDARY_RATE_TOL`] as given. Rates
/// estimated from samples may exceed it by the stencil's truncation estimate
/// plus the worst-case amplification of the sample error.
pub fn boundary_check_with_precision<T: Real>(pair: &ProtocolPair<T>, rel_precision: T) -> Result<BoundaryCheck> {
    let mut offending = Vec::new();
    let last = pair.grid().steps();
    for (k, tag) in [(0usize, "t0"), (last, "tf")] {
        let h = pair.hamiltonian(k)?;
        let inv = pair.invariant(k)?;
        let comm = commutator(&h, &inv)?.hs_norm();
        if comm > T::tol(BOUNDARY_COMMUTATOR_TOL) * h.hs_norm() * inv.hs_norm() {
            offending.push(format!("[H,I]@{tag}"));
        }
    }
    offending.extend(rate_violations(pair.b_coeffs(), false, rel_precision));
    Ok(BoundaryCheck {
        ok: offending.is_empty(),
        offending,
    })
}

/// Checks that every channel starts and ends at rest (`y_dot = 0`, and
/// `y_ddot = 0` when `second_order`).
pub fn schedule_boundary_check<T: Real>(schedule: &Schedule<T>, second_order: bool) -> BoundaryCheck {
    let offending = rate_violations(schedule, second_order, T::default_epsilon());
    BoundaryCheck {
        ok: offending.is_empty(),
        offending,
    }
}

/// `(estimate, allowance)` per end for the first (`order = 1`) or second
/// derivative of one sampled channel.
fn sampled_rate<T: Real>(y: &[T], h: T, order: usize, rel: T) -> [(T, T); 2] {
    // Weights of the second-order one-sided stencils, for the noise bound.
    let (weights, denom): (&[f64], T) = if order == 1 {
        (&[3.0, 4.0, 1.0], T::lit(2.0) * h)
    } else {
        (&[2.0, 5.0, 4.0, 1.0], h * h)
    };
    let mut out = [(T::zero(), T::zero()); 2];
    for (end, forward) in [(0usize, true), (1usize, false)] {
        let (lo, hi) = if order == 1 {
            fd::endpoint_first(y, h, forward)
        } else {
            fd::endpoint_second(y, h, forward)
        };
        let noise = weights
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                let v = if forward { y[k] } else { y[y.len() - 1 - k] };
                T::lit(w) * v.abs()
            })
            .fold(T::zero(), |a, b| a + b)
            * rel
            / denom;
        out[end] = (lo, (lo - hi).abs() + noise);
    }
    out
}

fn rate_violations<T: Real>(schedule: &Schedule<T>, second_order: bool, rel: T) -> Vec<String> {
    let mut out = Vec::new();
    let tol = T::tol(BOUNDARY_RATE_TOL);
    let h = schedule.grid().dt();
    let n = schedule.grid().len();
    let mut check = |name: &str, order: usize, reported: Option<&[Vec<T>; 2]>| {
        for c in 0..schedule.channels() {
            let est = match reported {
                Some(r) => [(r[0][c], T::zero()), (r[1][c], T::zero())],
                None if n > order + 3 => sampled_rate(&schedule.channel(c), h, order, rel),
                None => {
                    let r = if order == 1 {
                        schedule.endpoint_rates()
                    } else {
                        schedule.endpoint_accelerations()
                    };
                    [(r[0][c], T::zero()), (r[1][c], T::zero())]
                }
            };
            for ((v, allow), tag) in est.into_iter().zip(["t0", "tf"]) {
                if v.abs() > tol + allow {
                    out.push(format!("{name}[{c}]@{tag}"));
                }
            }
        }
    };
    let ep = schedule.endpoints();
    check("bdot", 1, ep.map(|e| &e.first));
    if second_order {
        check("bddot", 2, ep.and_then(|e| e.second.as_ref()));
    }
    out
}

/// Eigenvalues and phase-aligned eigenvectors along a grid.
#[derive(Debug, Clone)]
pub struct EigenTrack<T: Real> {
    pub times: Vec<T>,
    /// `values[k][n]`, ascending in `n`.
    pub values: Vec<Vec<T>>,
    /// `vectors[k][n]`.
    pub vectors: Vec<Vec<CVector<T>>>,
    /// `max_{k,n} |lambda_n(t_k) - lambda_n(t_0)|`.
    pub drift_max: T,
    /// Smallest adjacent gap seen anywhere on the grid.
    pub min_gap: T,
    pub warnings: Vec<String>,
}

impl<T: Real> EigenTrack<T> {
    /// Eigenvector trajectory of level `n`.
    pub fn branch(&self, n: usize) -> Vec<CVector<T>> {
        self.vectors.iter().map(|v| v[n].clone()).collect()
    }

    pub fn is_degenerate(&self) -> bool {
        self.min_gap < T::tol(DEGENERACY_GAP)
    }
}

/// Diagonalizes `I(t_k)` at every node.
///
/// Eigenvectors at `t0` have their largest-magnitude component real positive;
/// later ones are rotated so `<v(t_k)|v(t_{k+1})>` is real positive.
pub fn eigentrack<T: Real, I: OperatorFn<T> + ?Sized>(invariant: &I, grid: &TimeGrid<T>) -> Result<EigenTrack<T>> {
    eigentrack_nodes(grid, |k| invariant.at(grid.node(k)))
}

/// [`eigentrack`] over operators supplied per node index.
pub fn eigentrack_nodes<T, F>(grid: &TimeGrid<T>, mut op_at: F) -> Result<EigenTrack<T>>
where
    T: Real,
    F: FnMut(usize) -> Result<HermitianOperator<T>>,
{
    let mut values: Vec<Vec<T>> = Vec::with_capacity(grid.len());
    let mut vectors: Vec<Vec<CVector<T>>> = Vec::with_capacity(grid.len());
    let mut warnings = Vec::new();
    let mut min_gap: Option<T> = None;
    let mut drift = T::zero();
    for k in 0..grid.len() {
        let op = op_at(k)?;
        let e = op.eigh();
        if let Some((lower, gap)) = e.min_gap() {
            if gap < T::tol(DEGENERACY_GAP) {
                warnings.push(format!(
                    "near-degenerate levels {lower} and {} at t = {} (gap {:.3e})",
                    lower + 1,
                    grid.node(k),
                    gap.as_f64()
                ));
            }
            if min_gap.is_none_or(|m| gap < m) {
                min_gap = Some(gap);
            }
        }
        let mut vs: Vec<CVector<T>> = (0..op.dim()).map(|n| e.vector(n)).collect();
        match vectors.last() {
            None => vs.iter_mut().for_each(fix_global_phase),
            Some(prev) => {
                for (n, v) in vs.iter_mut().enumerate() {
                    let ov = linalg::inner(&prev[n], v);
                    let mag = modulus(ov);
                    if mag < T::lit(0.5) {
                        warnings.push(format!(
                            "eigenvector {n} overlap {:.3e} between t = {} and t = {}; possible level crossing",
                            mag.as_f64(),
                            grid.node(k - 1),
                            grid.node(k)
                        ));
                    }
                    if mag > T::zero() {
                        let phase = ov.conj() / c(mag);
                        *v = v.map(|z| z * phase);
                    }
                }
            }
        }
        if let Some(first) = values.first() {
            for (a, b) in e.values.iter().zip(first.iter()) {
                let d = (*a - *b).abs();
                if d > drift {
                    drift = d;
                }
            }
        }
        values.push(e.values);
        vectors.push(vs);
    }
    warnings.dedup();
    Ok(EigenTrack {
        times: grid.nodes(),
        values,
        vectors,
        drift_max: drift,
        min_gap: min_gap.unwrap_or_else(T::zero),
        warnings,
    })
}

/// Multiplies `v` by a phase making its largest-magnitude component real positive.
pub fn fix_global_phase<T: Real>(v: &mut CVector<T>) {
    let mut best = 0;
    let mut best_mag = T::zero();
    for (i, z) in v.iter().enumerate() {
        // strict comparison with a small slack keeps ties on the first index
        let m = z.norm_sqr();
        if m > best_mag * (T::one() + T::lit(1e-12)) {
            best = i;
            best_mag = m;
        }
    }
    if best_mag > T::zero() {
        let phase = cis(-argument(v[best]));
        *v = v.map(|z| z * phase);
    }
}

/// Lewis-Riesenfeld phase of one invariant eigenvector trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace<T: Real> {
    /// `alpha(t_k)`, with `alpha(t_0) = 0`.
    pub alpha: Vec<T>,
    /// Geometric part `int <phi| i d/ds |phi> ds`.
    pub geometric: Vec<T>,
    /// Largest imaginary part of the integrand seen (diagnostic).
    pub max_imag: T,
}

/// `alpha(t) = int_0^t <phi(s)| (i d/ds - H(s)) |phi(s)> ds` by the trapezoid
/// rule, with `d/ds` from central differences of the supplied samples.
pub fn lr_phase<T: Real, H: OperatorFn<T> + ?Sized>(
    hamiltonian: &H,
    phi: &[CVector<T>],
    grid: &TimeGrid<T>,
) -> Result<PhaseTrace<T>> {
    let hs = grid
        .nodes()
        .into_iter()
        .map(|t| hamiltonian.at(t))
        .collect::<Result<Vec<_>>>()?;
    lr_phase_nodes(&hs, phi, grid)
}

fn vector_derivative<T: Real>(phi: &[CVector<T>], h: T) -> Vec<CVector<T>> {
    let dim = phi.first().map_or(0, |v| v.len());
    let mut out = vec![CVector::zeros(dim); phi.len()];
    for j in 0..dim {
        let re: Vec<T> = phi.iter().map(|v| v[j].re).collect();
        let im: Vec<T> = phi.iter().map(|v| v[j].im).collect();
        let (dre, dim_) = (fd::derivative(&re, h), fd::derivative(&im, h));
        for (k, o) in out.iter_mut().enumerate() {
            o[j] = Complex::new(dre[k], dim_[k]);
        }
    }
    out
}

/// [`lr_phase`] with the Hamiltonian already sampled at the nodes.
pub fn lr_phase_nodes<T: Real>(
    hamiltonians: &[HermitianOperator<T>],
    phi: &[CVector<T>],
    grid: &TimeGrid<T>,
) -> Result<PhaseTrace<T>> {
    if phi.len() != grid.len() || hamiltonians.len() != grid.len() {
        return Err(Error::Shape(format!(
            "{} eigenvectors and {} Hamiltonians for {} nodes",
            phi.len(),
            hamiltonians.len(),
            grid.len()
        )));
    }
    let i = imag_unit::<T>();
    let dphi = vector_derivative(phi, grid.dt());
    let mut max_imag = T::zero();
    let mut dyn_part = Vec::with_capacity(grid.len());
    let mut geo_part = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let geo = i * linalg::inner(&phi[k], &dphi[k]);
        let hv = hamiltonians[k].matrix() * &phi[k];
        let energy = linalg::inner(&phi[k], &hv);
        let imag = (geo.im - energy.im).abs();
        if imag > max_imag {
            max_imag = imag;
        }
        if imag > T::lit(PHASE_IMAG_TOL) {
            return Err(Error::PhaseAlignment {
                node: k,
                imag: imag.as_f64(),
            });
        }
        geo_part.push(geo.re);
        dyn_part.push(energy.re);
    }
    let half_dt = grid.dt() * T::lit(0.5);
    let mut alpha = vec![T::zero(); grid.len()];
    let mut geometric = vec![T::zero(); grid.len()];
    for k in 1..grid.len() {
        geometric[k] = geometric[k - 1] + half_dt * (geo_part[k - 1] + geo_part[k]);
        let dynamic = half_dt * (dyn_part[k - 1] + dyn_part[k]);
        alpha[k] = alpha[k - 1] + half_dt * (geo_part[k - 1] + geo_part[k]) - dynamic;
    }
    Ok(PhaseTrace {
        alpha,
        geometric,
        max_imag,
    })
}

/// `c_n = <phi_n(t0)|psi0>`.
pub fn initial_coefficients<T: Real>(track: &EigenTrack<T>, psi0: &StateVector<T>) -> Result<Vec<Complex<T>>> {
    let first = &track.vectors[0];
    if first[0].len() != psi0.dim() {
        return Err(Error::Shape("state and invariant dimensions differ".into()));
    }
    Ok(first.iter().map(|v| linalg::inner(v, psi0.amplitudes())).collect())
}

/// `psi(t) = sum_n c_n e^{i alpha_n(t)} |phi_n(t)>`.
///
/// Refuses degenerate invariant spectra, where the superposition is not
/// defined branch by branch.
pub fn adiabatic_solution<T: Real>(
    track: &EigenTrack<T>,
    phases: &[Vec<T>],
    coeffs: &[Complex<T>],
) -> Result<Vec<StateVector<T>>> {
    let levels = track.vectors[0].len();
    if coeffs.len() != levels || phases.len() != levels {
        return Err(Error::Shape(format!(
            "{} coefficients and {} phase traces for {} levels",
            coeffs.len(),
            phases.len(),
            levels
        )));
    }
    let weight = coeffs.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
    if (weight - T::one()).abs() > T::tol(1e-10) {
        return Err(Error::NotNormalized {
            norm: weight.sqrt().as_f64(),
        });
    }
    if track.is_degenerate() {
        return Err(Error::Degenerate {
            t: f64::NAN,
            lower: 0,
            upper: 0,
            gap: track.min_gap.as_f64(),
        });
    }
    let nodes = track.times.len();
    if phases.iter().any(|p| p.len() != nodes) {
        return Err(Error::Shape("phase trace length differs from eigen track".into()));
    }
    let mut out = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let mut psi = CVector::zeros(levels);
        for n in 0..levels {
            let w = coeffs[n] * cis(phases[n][k]);
            psi += track.vectors[k][n].map(|z| z * w);
        }
        out.push(StateVector::normalized(psi)?);
    }
    Ok(out)
}

/// Largest `|arg <phi(t_k)|psi(t_k)> - alpha(t_k)|` (wrapped into `(-pi, pi]`).
pub fn phase_mismatch<T: Real>(phi: &[CVector<T>], psi: &[StateVector<T>], alpha: &[T]) -> T {
    let two_pi = T::two_pi();
    phi.iter()
        .zip(psi)
        .zip(alpha)
        .map(|((p, s), a)| {
            let arg = argument(linalg::inner(p, s.amplitudes()));
            let mut d = (arg - *a) % two_pi;
            if d > T::pi() {
                d -= two_pi;
            } else if d <= -T::pi() {
                d += two_pi;
            }
            d.abs()
        })
        .fold(T::zero(), |m, d| if d > m { d } else { m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{structure_constants, BasisSet};

    type Op = HermitianOperator<f64>;

    fn pauli_f() -> StructureConstants<f64> {
        structure_constants(&BasisSet::pauli()).unwrap()
    }

    #[test]
    fn static_pair_has_zero_residual() {
        let grid = TimeGrid::new(0.0, 1.0, 20).unwrap();
        let h = |_t: f64| Ok(Op::pauli_z() * 0.7 + Op::pauli_x() * 0.2);
        let r = invariant_residual(&h, &h, &grid).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn coefficient_rhs_examples() {
        let f = pauli_f();
        let zero = coefficient_rhs(&f, &[0.0, 0.0, 1.0], &[0.0, 0.0, 2.0]).unwrap();
        assert_eq!(zero, vec![0.0, 0.0, 0.0]);
        let theta: f64 = 0.4;
        let h = 1.3;
        let got = coefficient_rhs(&f, &[0.0, h, 0.0], &[theta.sin(), 0.0, theta.cos()]).unwrap();
        let expected = [2.0 * h * theta.cos(), 0.0, -2.0 * h * theta.sin()];
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 1e-14);
        }
        assert!(coefficient_rhs(&f, &[1.0], &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn constant_invariant_needs_no_field() {
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let b = Schedule::from_fn(grid, |_| vec![0.0, 0.6, 0.8], None).unwrap();
        let sol = solve_fields(&pauli_f(), &b, 1e-6).unwrap();
        assert!(sol.h.values().iter().flatten().all(|v| v.abs() < 1e-15));
        assert!(sol.residuals.iter().all(|r| *r < 1e-15));
    }

    #[test]
    fn growing_bloch_vector_is_unreachable() {
        // |e(t)| changes, so b_dot has a component along b that no field produces
        let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
        let b = Schedule::from_fn(grid, |t: f64| vec![0.0, 0.0, 1.0 + t], None).unwrap();
        assert!(matches!(
            solve_fields(&pauli_f(), &b, 1e-6),
            Err(Error::Inconsistent { node: 0, .. })
        ));
    }

    #[test]
    fn static_sigma_z_track() {
        let grid = TimeGrid::new(0.0, 1.0, 5).unwrap();
        let track = eigentrack(&|_t: f64| Ok(Op::pauli_z()), &grid).unwrap();
        for v in &track.values {
            assert_eq!(v, &vec![-1.0, 1.0]);
        }
        assert_eq!(track.drift_max, 0.0);
        assert!(track.warnings.is_empty());
    }

    #[test]
    fn degenerate_track_warns_and_blocks_superposition() {
        let grid = TimeGrid::new(0.0, 1.0, 5).unwrap();
        let track = eigentrack(&|_t: f64| Ok(Op::identity(2)), &grid).unwrap();
        assert!(track.is_degenerate());
        assert!(!track.warnings.is_empty());
        let phases = vec![vec![0.0; 6]; 2];
        let c = [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)];
        assert!(matches!(
            adiabatic_solution(&track, &phases, &c),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn global_phase_convention() {
        let mut v: CVector<f64> = CVector::from_vec(vec![Complex::new(0.1, 0.2), Complex::new(0.0, -0.9)]);
        fix_global_phase(&mut v);
        assert!(v[1].im.abs() < 1e-15 && v[1].re > 0.0);
    }

    #[test]
    fn schedule_rejects_wrong_endpoint_derivative() {
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let ep = EndpointDerivatives {
            first: [vec![0.0], vec![0.0]],
            second: None,
        };
        // y = t has derivative 1 at both ends, not 0
        assert!(Schedule::from_fn(grid, |t: f64| vec![t], Some(ep)).is_err());
        let ok = EndpointDerivatives {
            first: [vec![1.0], vec![1.0]],
            second: Some([vec![0.0], vec![0.0]]),
        };
        assert!(Schedule::from_fn(grid, |t: f64| vec![t], Some(ok)).is_ok());
    }

    #[test]
    fn phase_mismatch_wraps() {
        let phi = vec![CVector::from_vec(vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)])];
        let psi = vec![StateVector::new(CVector::from_vec(vec![cis(3.1), Complex::new(0.0, 0.0)])).unwrap()];
        let d = phase_mismatch(&phi, &psi, &[3.1 - 2.0 * std::f64::consts::PI]);
        assert!(d < 1e-12);
    }
}
