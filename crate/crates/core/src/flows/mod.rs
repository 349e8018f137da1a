//! Isospectral flows sharing the invariant equation: Wegner, Toda, KdV.

pub mod kdv;
pub mod toda;
pub mod tridiagonal;
pub mod wegner;

use crate::scalar::Real;

pub use kdv::{kdv_boundstate_check, kdv_residual, kdv_soliton, schrodinger_operator, BoundStateTrace, SolitonField};
pub use toda::{spin_lax_build, spin_lax_residual, toda_flow, toda_rhs, SpinLax, SpinLaxCheck, TodaRun, MAX_SPIN_SITES};
pub use tridiagonal::TridiagonalMatrix;
pub use wegner::{offdiag_decay_check, wegner_flow, wegner_generator, DecayCheck, WegnerOptions, WegnerRun};

/// Time series recorded along a flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace<T: Real> {
    pub times: Vec<T>,
    /// `Σ_{m≠n} |H_mn|²` at each recorded time.
    pub offdiag_norm_sq: Vec<T>,
    /// `(time, ascending spectrum)` at the snapshot times.
    pub eigenvalue_snapshots: Vec<(T, Vec<T>)>,
    pub warnings: Vec<String>,
}

impl<T: Real> FlowTrace<T> {
    pub(crate) fn new() -> Self {
        Self {
            times: Vec::new(),
            offdiag_norm_sq: Vec::new(),
            eigenvalue_snapshots: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// `max |λ_n(s) − λ_n(s_0)|` over the snapshots, pairing levels by sorted order.
    pub fn spectral_drift(&self) -> T {
        let Some((_, first)) = self.eigenvalue_snapshots.first() else {
            return T::zero();
        };
        self.eigenvalue_snapshots
            .iter()
            .flat_map(|(_, row)| row.iter().zip(first).map(|(a, b)| (*a - *b).abs()))
            .fold(T::zero(), |m, d| m.max(d))
    }
}
