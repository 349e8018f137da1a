//! Open Toda chain in Flaschka variables and its XX spin-chain Lax pair.
//!
//! `dJ_n/dt = J_n (h_{n+1} − h_n)`, `dh_n/dt = 2 (J_n² − J_{n−1}²)` with
//! `J_0 = J_N = 0`. The tridiagonal matrix with diagonal `h` and off-diagonal
//! `J` evolves isospectrally.

use super::{FlowTrace, TridiagonalMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::operator::HermitianOperator;
use crate::propagator::{integrate_ode, TimeGrid};
use crate::scalar::{c, imag_unit, Real};

/// Largest chain handled by the dense `2^N` spin construction.
pub const MAX_SPIN_SITES: usize = 8;
/// Adjacent tridiagonal levels closer than this (relative) trigger a crossing warning.
pub const CROSSING_TOL: f64 = 1e-8;
/// At most this many spin-spectrum snapshots are taken by [`spin_lax_residual`].
pub const SPIN_SNAPSHOTS: usize = 200;

fn check_shape<T>(j: &[T], h: &[T]) -> Result<()> {
    if h.is_empty() || j.len() + 1 != h.len() {
        return Err(Error::Shape(format!(
            "open chain needs len(J) = len(h) - 1 >= 0, got len(J) = {} and len(h) = {}",
            j.len(),
            h.len()
        )));
    }
    Ok(())
}

/// `(dJ/dt, dh/dt)` for the open chain.
pub fn toda_rhs<T: Real>(j: &[T], h: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    check_shape(j, h)?;
    let mut dj = vec![T::zero(); j.len()];
    let mut dh = vec![T::zero(); h.len()];
    rhs_into(j, h, &mut dj, &mut dh);
    Ok((dj, dh))
}

fn rhs_into<T: Real>(j: &[T], h: &[T], dj: &mut [T], dh: &mut [T]) {
    let two = T::lit(2.0);
    for n in 0..j.len() {
        dj[n] = j[n] * (h[n + 1] - h[n]);
    }
    for n in 0..h.len() {
        let right = if n < j.len() { j[n] * j[n] } else { T::zero() };
        let left = if n > 0 { j[n - 1] * j[n - 1] } else { T::zero() };
        dh[n] = two * (right - left);
    }
}

/// Trajectory of [`toda_flow`].
#[derive(Debug, Clone)]
pub struct TodaRun<T: Real> {
    pub grid: TimeGrid<T>,
    /// `J(t_k)` per node.
    pub j: Vec<Vec<T>>,
    /// `h(t_k)` per node.
    pub h: Vec<Vec<T>>,
    /// `2 Σ J²` and the tridiagonal spectrum at every node.
    pub trace: FlowTrace<T>,
}

impl<T: Real> TodaRun<T> {
    pub fn sites(&self) -> usize {
        self.h[0].len()
    }

    pub fn matrix(&self, k: usize) -> TridiagonalMatrix<T> {
        TridiagonalMatrix::new(self.h[k].clone(), self.j[k].clone()).expect("shape fixed at construction")
    }

    /// `max_k |Σ h_n(t_k) − Σ h_n(t_0)|`.
    pub fn trace_drift(&self) -> T {
        let sum = |v: &Vec<T>| v.iter().fold(T::zero(), |a, &x| a + x);
        let s0 = sum(&self.h[0]);
        self.h.iter().fold(T::zero(), |m, v| m.max((sum(v) - s0).abs()))
    }
}

/// RK4 integration over `grid`, recording the tridiagonal spectrum at every node.
pub fn toda_flow<T: Real>(j0: &[T], h0: &[T], grid: &TimeGrid<T>) -> Result<TodaRun<T>> {
    check_shape(j0, h0)?;
    let nj = j0.len();
    let y0: Vec<T> = j0.iter().chain(h0.iter()).copied().collect();
    let traj = integrate_ode(
        |_, y: &[T], dy: &mut [T]| {
            let (dj, dh) = dy.split_at_mut(nj);
            rhs_into(&y[..nj], &y[nj..], dj, dh);
        },
        &y0,
        grid,
    )?;
    let mut trace = FlowTrace::new();
    let mut j = Vec::with_capacity(traj.len());
    let mut h = Vec::with_capacity(traj.len());
    let mut warned = false;
    for (k, y) in traj.into_iter().enumerate() {
        let t = grid.node(k);
        let m = TridiagonalMatrix::new(y[nj..].to_vec(), y[..nj].to_vec())?;
        let ev = m.eigenvalues();
        let scale = ev.iter().fold(T::one(), |a, v| a.max(v.abs()));
        if !warned && ev.windows(2).any(|w| w[1] - w[0] < T::tol(CROSSING_TOL) * scale) {
            trace
                .warnings
                .push(format!("near level crossing at t = {t}; sorted-order pairing may mislabel levels"));
            warned = true;
        }
        trace.times.push(t);
        trace.offdiag_norm_sq.push(m.offdiag_norm_sq());
        trace.eigenvalue_snapshots.push((t, ev));
        j.push(y[..nj].to_vec());
        h.push(y[nj..].to_vec());
    }
    Ok(TodaRun {
        grid: *grid,
        j,
        h,
        trace,
    })
}

/// Many-body Lax pair of the XX chain on `N` sites, open boundaries.
///
/// `L = ½ Σ J_n (σˣ_n σˣ_{n+1} + σʸ_n σʸ_{n+1}) + ½ Σ h_n σᶻ_n` and
/// `M = −(i/2) Σ J_n (σˣ_n σʸ_{n+1} − σʸ_n σˣ_{n+1})`, so `dL/dt = [M, L]`.
/// `M` is anti-Hermitian; `i M` is the Hermitian generator.
#[derive(Debug, Clone)]
pub struct SpinLax<T: Real> {
    pub l: HermitianOperator<T>,
    pub m: CMatrix<T>,
}

/// Per-site and per-bond Pauli products, built once per chain length.
struct SpinTerms<T: Real> {
    z: Vec<CMatrix<T>>,
    hop: Vec<CMatrix<T>>,
    twist: Vec<CMatrix<T>>,
}

fn pauli<T: Real>(which: u8) -> CMatrix<T> {
    let (o, l, i) = (c(T::zero()), c(T::one()), imag_unit::<T>());
    match which {
        b'x' => CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        b'y' => CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        _ => CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    }
}

/// Tensor product over sites with the listed factors and identity elsewhere; site 0 is leftmost.
fn embed<T: Real>(n: usize, ops: &[(usize, &CMatrix<T>)]) -> CMatrix<T> {
    let id = CMatrix::<T>::identity(2, 2);
    let mut acc = CMatrix::<T>::identity(1, 1);
    for site in 0..n {
        let factor = ops.iter().find(|(s, _)| *s == site).map_or(&id, |(_, m)| *m);
        acc = acc.kronecker(factor);
    }
    acc
}

impl<T: Real> SpinTerms<T> {
    fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_SPIN_SITES {
            return Err(Error::Capacity(format!(
                "dense spin construction supports 1..={MAX_SPIN_SITES} sites, got {n}"
            )));
        }
        let (x, y, z) = (pauli::<T>(b'x'), pauli::<T>(b'y'), pauli::<T>(b'z'));
        let zs = (0..n).map(|s| embed(n, &[(s, &z)])).collect();
        let mut hop = Vec::new();
        let mut twist = Vec::new();
        for s in 0..n.saturating_sub(1) {
            hop.push(embed(n, &[(s, &x), (s + 1, &x)]) + embed(n, &[(s, &y), (s + 1, &y)]));
            twist.push(embed(n, &[(s, &x), (s + 1, &y)]) - embed(n, &[(s, &y), (s + 1, &x)]));
        }
        Ok(Self { z: zs, hop, twist })
    }

    fn l(&self, j: &[T], h: &[T]) -> CMatrix<T> {
        let half = T::lit(0.5);
        let dim = self.z[0].nrows();
        let mut acc = CMatrix::zeros(dim, dim);
        for (op, &v) in self.hop.iter().zip(j) {
            acc += op * c(half * v);
        }
        for (op, &v) in self.z.iter().zip(h) {
            acc += op * c(half * v);
        }
        acc
    }

    fn m(&self, j: &[T]) -> CMatrix<T> {
        let dim = self.z[0].nrows();
        let factor = -imag_unit::<T>() * T::lit(0.5);
        let mut acc = CMatrix::zeros(dim, dim);
        for (op, &v) in self.twist.iter().zip(j) {
            acc += op * (factor * v);
        }
        acc
    }
}

/// Dense `(L, M)` for `N = len(h) ≤` [`MAX_SPIN_SITES`].
pub fn spin_lax_build<T: Real>(j: &[T], h: &[T]) -> Result<SpinLax<T>> {
    check_shape(j, h)?;
    let terms = SpinTerms::new(h.len())?;
    Ok(SpinLax {
        l: HermitianOperator::from_matrix_unchecked(terms.l(j, h)),
        m: terms.m(j),
    })
}

/// Outcome of [`spin_lax_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinLaxCheck<T: Real> {
    /// `max_k ‖(L_{k+1} − L_{k−1})/(2dt) − [M_k, L_k]‖_HS` over interior nodes.
    pub residual_max: T,
    /// Largest change of the sorted many-body spectrum of `L` over the snapshots.
    pub spectral_drift: T,
}

/// Checks `dL/dt = [M, L]` along a Toda trajectory.
///
/// `dL/dt` is the fourth-order central difference of the sampled `L`, so the
/// residual measures the integrated trajectory rather than the stencil.
pub fn spin_lax_residual<T: Real>(run: &TodaRun<T>) -> Result<SpinLaxCheck<T>> {
    let terms = SpinTerms::new(run.sites())?;
    let nodes = run.j.len();
    let inv = T::one() / (T::lit(12.0) * run.grid.dt());
    let lk = |k: usize| terms.l(&run.j[k], &run.h[k]);
    let mut residual_max = T::zero();
    for k in 2..nodes.saturating_sub(2) {
        let dl = ((lk(k + 1) - lk(k - 1)) * c(T::lit(8.0)) - lk(k + 2) + lk(k - 2)) * c(inv);
        let l = terms.l(&run.j[k], &run.h[k]);
        let m = terms.m(&run.j[k]);
        let r = linalg::frobenius(&(dl - linalg::commutator_raw(&m, &l)));
        residual_max = residual_max.max(r);
    }
    let stride = (nodes / SPIN_SNAPSHOTS).max(1);
    let first = linalg::eigh(&terms.l(&run.j[0], &run.h[0])).values;
    let mut spectral_drift = T::zero();
    let mut k = 0;
    while k < nodes {
        let ev = linalg::eigh(&terms.l(&run.j[k], &run.h[k])).values;
        for (a, b) in ev.iter().zip(&first) {
            spectral_drift = spectral_drift.max((*a - *b).abs());
        }
        k = if k + 1 == nodes { nodes } else { (k + stride).min(nodes - 1) };
    }
    Ok(SpinLaxCheck {
        residual_max,
        spectral_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_chain_plug_in() {
        let (dj, dh) = toda_rhs(&[0.5, 0.5, 0.5], &[0.2; 4]).unwrap();
        assert!(dj.iter().all(|v| *v == 0.0));
        assert_eq!(dh, vec![0.5, 0.0, 0.0, -0.5]);
        assert!(toda_rhs(&[1.0; 3], &[0.0; 3]).is_err());
    }

    #[test]
    fn decoupled_sites_are_static() {
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let run = toda_flow(&[0.0, 0.0], &[1.0, -2.0, 0.5], &grid).unwrap();
        assert_eq!(run.h.last().unwrap(), &vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn zero_coupling_spin_l_is_diagonal() {
        let lax = spin_lax_build(&[0.0f64, 0.0], &[0.3, -0.7, 1.1]).unwrap();
        assert_eq!(lax.l.offdiag_norm_sq(), 0.0);
        // Site 0 is the leftmost tensor factor: all spins up gives +½Σh.
        assert!((lax.l.matrix()[(0, 0)].re - 0.35).abs() < 1e-15);
        assert!(spin_lax_build::<f64>(&[0.0; 8], &[0.0; 9]).is_err());
    }

    #[test]
    fn m_is_anti_hermitian() {
        let lax = spin_lax_build(&[0.4, -0.9], &[0.1, 0.2, 0.3]).unwrap();
        assert!((&lax.m + lax.m.adjoint()).norm() < 1e-15);
        assert!(lax.m.norm() > 0.1);
    }
}
