//! Wegner flow `dH/ds = [[H_d, H], H]`, equivalently `i dH/ds = [η, H]`
//! with `η = i[H_d, H]`.

use num_complex::Complex;

use super::FlowTrace;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::operator::HermitianOperator;
use crate::scalar::{c, imag_unit, Real};

/// `‖η‖_HS` below this with off-diagonal weight above [`STALL_OFFDIAG`] is a stall.
pub const STALL_GENERATOR: f64 = 1e-12;
pub const STALL_OFFDIAG: f64 = 1e-8;
/// Points with `Σ|H_mn|² < DECAY_FLOOR · ‖H‖²` are skipped by [`offdiag_decay_check`].
pub const DECAY_FLOOR: f64 = 1e-8;
/// Allowed increase of the off-diagonal weight between steps, relative to `‖H‖²`.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// `η = i[H_d, H]`.
pub fn wegner_generator<T: Real>(h: &HermitianOperator<T>) -> HermitianOperator<T> {
    let g = diag_commutator(h.matrix());
    let i = imag_unit::<T>();
    HermitianOperator::from_matrix_unchecked(g.map(|z| z * i))
}

/// `[H_d, H]_mn = (ε_m − ε_n) H_mn`.
fn diag_commutator<T: Real>(h: &CMatrix<T>) -> CMatrix<T> {
    let n = h.nrows();
    CMatrix::from_fn(n, n, |m, k| h[(m, k)] * (h[(m, m)].re - h[(k, k)].re))
}

fn add_scaled<T: Real>(dst: &mut CMatrix<T>, src: &CMatrix<T>, a: Complex<T>) {
    dst.zip_apply(src, |d, s| *d += s * a);
}

/// Preallocated RK4 buffers for the flow right-hand side.
struct Stepper<T: Real> {
    g: CMatrix<T>,
    stage: CMatrix<T>,
    k: CMatrix<T>,
    acc: CMatrix<T>,
}

impl<T: Real> Stepper<T> {
    fn new(n: usize) -> Self {
        let z = || CMatrix::zeros(n, n);
        Self {
            g: z(),
            stage: z(),
            k: z(),
            acc: z(),
        }
    }

    /// `k = [[H_d, H], H]` evaluated at `stage`.
    fn eval(&mut self) {
        let n = self.stage.nrows();
        for m in 0..n {
            for j in 0..n {
                self.g[(m, j)] = self.stage[(m, j)] * (self.stage[(m, m)].re - self.stage[(j, j)].re);
            }
        }
        let one = c(T::one());
        self.k.gemm(one, &self.g, &self.stage, c(T::zero()));
        self.k.gemm(-one, &self.stage, &self.g, one);
    }

    fn step(&mut self, h: &mut CMatrix<T>, dt: T) {
        let half = c(dt * T::lit(0.5));
        let third = c(dt / T::lit(3.0));
        let sixth = c(dt / T::lit(6.0));
        self.stage.copy_from(h);
        self.eval();
        self.acc.copy_from(h);
        add_scaled(&mut self.acc, &self.k, sixth);
        self.stage.copy_from(h);
        add_scaled(&mut self.stage, &self.k, half);
        self.eval();
        add_scaled(&mut self.acc, &self.k, third);
        self.stage.copy_from(h);
        add_scaled(&mut self.stage, &self.k, half);
        self.eval();
        add_scaled(&mut self.acc, &self.k, third);
        self.stage.copy_from(h);
        add_scaled(&mut self.stage, &self.k, c(dt));
        self.eval();
        add_scaled(&mut self.acc, &self.k, sixth);
        let n = h.nrows();
        let two = T::lit(2.0);
        for m in 0..n {
            h[(m, m)] = c(self.acc[(m, m)].re);
            for j in m + 1..n {
                let v = (self.acc[(m, j)] + self.acc[(j, m)].conj()).unscale(two);
                h[(m, j)] = v;
                h[(j, m)] = v.conj();
            }
        }
    }
}

fn offdiag_sq<T: Real>(h: &CMatrix<T>) -> T {
    let n = h.nrows();
    let mut acc = T::zero();
    for m in 0..n {
        for k in 0..n {
            if m != k {
                acc += h[(m, k)].norm_sqr();
            }
        }
    }
    acc
}

/// `−2 Σ (ε_n − ε_m)² |H_mn|²`.
fn decay_formula<T: Real>(h: &CMatrix<T>) -> T {
    let n = h.nrows();
    let mut acc = T::zero();
    for m in 0..n {
        for k in 0..n {
            let d = h[(k, k)].re - h[(m, m)].re;
            acc += d * d * h[(m, k)].norm_sqr();
        }
    }
    -T::lit(2.0) * acc
}

/// Flow controls. `s_max = None` selects `20 / (min level spacing)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WegnerOptions<T: Real> {
    pub s_max: Option<T>,
    pub dt: T,
    /// Spectrum snapshot every this many steps (the last step is always included).
    pub snapshot_every: usize,
    /// Stop once `Σ|H_mn|² ≤ converge_tol · ‖H‖²`; zero disables early exit.
    pub converge_tol: T,
}

impl<T: Real> Default for WegnerOptions<T> {
    fn default() -> Self {
        Self {
            s_max: None,
            dt: T::lit(1e-3),
            snapshot_every: 100,
            converge_tol: T::lit(1e-24),
        }
    }
}

/// Outcome of [`wegner_flow`].
#[derive(Debug, Clone)]
pub struct WegnerRun<T: Real> {
    /// Off-diagonal weight at every step.
    pub trace: FlowTrace<T>,
    /// `−2 Σ (ε_n − ε_m)² |H_mn|²` at every recorded step.
    pub decay_rate: Vec<T>,
    pub dt: T,
    pub s_max: T,
    pub final_h: HermitianOperator<T>,
    pub converged: bool,
    pub stalled: bool,
}

impl<T: Real> WegnerRun<T> {
    /// Final diagonal, ascending.
    pub fn sorted_diagonal(&self) -> Vec<T> {
        let m = self.final_h.matrix();
        let mut d: Vec<T> = (0..m.nrows()).map(|i| m[(i, i)].re).collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        d
    }
}

/// Default horizon `20 / δ²` with `δ` the smallest level spacing above `1e-8·‖H‖`.
pub fn default_horizon<T: Real>(h: &HermitianOperator<T>) -> T {
    let ev = h.eigenvalues();
    let floor = T::lit(1e-8) * h.hs_norm().max(T::default_epsilon());
    let gap = ev
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > floor)
        .fold(None, |m: Option<T>, g| Some(m.map_or(g, |m| m.min(g))));
    match gap {
        Some(g) => T::lit(20.0) / (g * g),
        None => T::lit(20.0),
    }
}

/// Integrates the flow with RK4 at step `opts.dt`, symmetrizing after each step.
pub fn wegner_flow<T: Real>(h0: &HermitianOperator<T>, opts: &WegnerOptions<T>) -> Result<WegnerRun<T>> {
    if opts.dt <= T::zero() {
        return Err(Error::InvalidArgument("flow step must be positive".into()));
    }
    let s_max = opts.s_max.unwrap_or_else(|| default_horizon(h0));
    if s_max <= T::zero() {
        return Err(Error::InvalidArgument("s_max must be positive".into()));
    }
    let steps = (s_max / opts.dt).ceil().to_usize().unwrap_or(usize::MAX).max(1);
    let dt = s_max / T::count(steps);
    let snapshot_every = opts.snapshot_every.max(1);
    let norm_sq = h0.hs_norm() * h0.hs_norm();
    let mut h = h0.matrix().clone();
    let mut stepper = Stepper::new(h.nrows());
    let mut trace = FlowTrace::new();
    let mut decay_rate = Vec::new();
    let record = |h: &CMatrix<T>, s: T, trace: &mut FlowTrace<T>, decay: &mut Vec<T>| {
        trace.times.push(s);
        trace.offdiag_norm_sq.push(offdiag_sq(h));
        decay.push(decay_formula(h));
    };
    record(&h, T::zero(), &mut trace, &mut decay_rate);
    trace.eigenvalue_snapshots.push((T::zero(), linalg::eigh(&h).values));
    let mut converged = false;
    let mut stalled = false;
    let mut s = T::zero();
    for k in 0..steps {
        let off = *trace.offdiag_norm_sq.last().expect("recorded");
        if opts.converge_tol > T::zero() && off <= opts.converge_tol * norm_sq {
            converged = true;
            break;
        }
        let gnorm = diag_commutator(&h).norm();
        if gnorm < T::tol(STALL_GENERATOR) && off > T::lit(STALL_OFFDIAG) {
            stalled = true;
            trace.warnings.push(format!(
                "flow stalled at s = {s}: generator norm {:.3e} with off-diagonal weight {:.3e} (degenerate diagonal)",
                gnorm.as_f64(),
                off.as_f64()
            ));
            break;
        }
        stepper.step(&mut h, dt);
        s = dt * T::count(k + 1);
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Divergence { t: s.as_f64() });
        }
        record(&h, s, &mut trace, &mut decay_rate);
        if (k + 1) % snapshot_every == 0 || k + 1 == steps {
            trace.eigenvalue_snapshots.push((s, linalg::eigh(&h).values));
        }
    }
    if trace.eigenvalue_snapshots.last().is_some_and(|(t, _)| *t != s) {
        trace.eigenvalue_snapshots.push((s, linalg::eigh(&h).values));
    }
    if !converged && !stalled {
        let off = *trace.offdiag_norm_sq.last().expect("recorded");
        converged = opts.converge_tol > T::zero() && off <= opts.converge_tol * norm_sq;
    }
    Ok(WegnerRun {
        trace,
        decay_rate,
        dt,
        s_max,
        final_h: HermitianOperator::from_matrix_unchecked(h),
        converged,
        stalled,
    })
}

/// Outcome of [`offdiag_decay_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCheck<T: Real> {
    /// Largest `|fd − formula| / |formula|` over the checked points.
    pub max_relative_mismatch: T,
    /// Largest step-to-step increase of the off-diagonal weight.
    pub max_increase: T,
    pub monotone: bool,
    pub checked: usize,
}

/// Compares a central difference of the recorded off-diagonal weight with
/// `−2 Σ (ε_n − ε_m)² |H_mn|²`, and checks monotone decay.
///
/// Points whose weight is below [`DECAY_FLOOR`]`·‖H‖²` are skipped: there the
/// difference quotient is dominated by rounding.
pub fn offdiag_decay_check<T: Real>(run: &WegnerRun<T>) -> DecayCheck<T> {
    let f = &run.trace.offdiag_norm_sq;
    let norm_sq = run.final_h.hs_norm() * run.final_h.hs_norm();
    let floor = T::lit(DECAY_FLOOR) * norm_sq;
    let mut worst = T::zero();
    let mut checked = 0;
    let inv = T::one() / (T::lit(2.0) * run.dt);
    for k in 1..f.len().saturating_sub(1) {
        if f[k + 1] < floor {
            continue;
        }
        let fd = (f[k + 1] - f[k - 1]) * inv;
        let formula = run.decay_rate[k];
        if formula == T::zero() {
            continue;
        }
        worst = worst.max(((fd - formula) / formula).abs());
        checked += 1;
    }
    let max_increase = f.windows(2).fold(T::zero(), |m, w| m.max(w[1] - w[0]));
    DecayCheck {
        max_relative_mismatch: worst,
        max_increase,
        monotone: max_increase <= T::lit(MONOTONE_SLACK) * norm_sq,
        checked,
    }
}
