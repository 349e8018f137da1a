//! Counterdiabatic terms, their identification with a dynamical invariant and
//! the variational fit of `[H0, i∂_t H0 − [H1, H0]] = 0`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariant::{invariant_residual, VerificationReport, DEGENERACY_GAP};
use crate::linalg::{self, CMatrix, Eigh};
use crate::operator::{BasisSet, HermitianOperator};
use crate::propagator::{OperatorFn, TimeGrid};
use crate::scalar::{imag_unit, Real};

/// `‖[D, I]‖ ≤ IDENTIFY_COMMUTATOR_TOL · ‖D‖ · ‖I‖` for the identification to pass.
pub const IDENTIFY_COMMUTATOR_TOL: f64 = 1e-6;
/// Allowed spectral drift of `εI` along the grid.
pub const IDENTIFY_DRIFT_TOL: f64 = 1e-8;
/// Relative singular-value cutoff of the variational least-squares system.
pub const VARIATIONAL_RCOND: f64 = 1e-10;

/// `(H(t + dt) − H(t − dt)) / 2dt`.
pub fn central_rate<T: Real, F: OperatorFn<T> + ?Sized>(h: &F, t: T, dt: T) -> Result<HermitianOperator<T>> {
    if dt <= T::zero() {
        return Err(Error::InvalidArgument("difference step must be positive".into()));
    }
    let fwd = h.at(t + dt)?;
    let bwd = h.at(t - dt)?;
    Ok((fwd - bwd).scale(T::one() / (T::lit(2.0) * dt)))
}

/// `H1 = i Σ_{m≠n} |m⟩⟨m|Ḣ0|n⟩⟨n| / (E_n − E_m)` in a given eigenbasis of `H0`.
///
/// Each term depends on the eigenvectors only through the projectors, so the
/// result does not change when the basis vectors are re-phased.
pub fn cd_from_eigenbasis<T: Real>(eig: &Eigh<T>, hdot: &HermitianOperator<T>, t: T) -> Result<HermitianOperator<T>> {
    let n = eig.values.len();
    if hdot.dim() != n {
        return Err(Error::Shape(format!(
            "rate has dimension {}, eigenbasis has {n}",
            hdot.dim()
        )));
    }
    let scale = eig.values.iter().fold(T::one(), |m, v| m.max(v.abs()));
    if let Some((k, gap)) = eig.min_gap() {
        if gap <= T::tol(DEGENERACY_GAP) * scale {
            return Err(Error::Degenerate {
                t: t.as_f64(),
                lower: k,
                upper: k + 1,
                gap: gap.as_f64(),
            });
        }
    }
    let v = &eig.vectors;
    // Ḣ0 in the eigenbasis, then back.
    let rot = v.adjoint() * hdot.matrix() * v;
    let i = imag_unit::<T>();
    let mut k = CMatrix::zeros(n, n);
    for m in 0..n {
        for j in 0..n {
            if m != j {
                k[(m, j)] = rot[(m, j)] * i / (eig.values[j] - eig.values[m]);
            }
        }
    }
    let h1 = v * k * v.adjoint();
    let sym = (&h1 + h1.adjoint()) * crate::scalar::c(T::lit(0.5));
    Ok(HermitianOperator::from_matrix_unchecked(sym))
}

/// Counterdiabatic term of `H0` at `t`, with `Ḣ0` from a central difference of step `dt`.
pub fn cd_term<T: Real, F: OperatorFn<T> + ?Sized>(h0: &F, t: T, dt: T) -> Result<HermitianOperator<T>> {
    let hdot = central_rate(h0, t, dt)?;
    cd_from_eigenbasis(&h0.at(t)?.eigh(), &hdot, t)
}

/// `‖[H0, i∂_t H0 − [H1, H0]]‖_HS` with a central difference of step `dt`.
pub fn h01_residual<T, F, G>(h0: &F, h1: &G, t: T, dt: T) -> Result<T>
where
    T: Real,
    F: OperatorFn<T> + ?Sized,
    G: OperatorFn<T> + ?Sized,
{
    let a = h0.at(t)?;
    let inner = h01_inner(&a, &central_rate(h0, t, dt)?, h1.at(t)?.matrix());
    Ok(linalg::frobenius(&linalg::commutator_raw(a.matrix(), &inner)))
}

/// `i Ḣ0 − [H1, H0]`.
fn h01_inner<T: Real>(h0: &HermitianOperator<T>, hdot: &HermitianOperator<T>, h1: &CMatrix<T>) -> CMatrix<T> {
    let i = imag_unit::<T>();
    hdot.matrix().map(|z| z * i) - linalg::commutator_raw(h1, h0.matrix())
}

/// Outcome of [`invariant_cd_identify`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Identification {
    /// `residual_max` holds the invariant residual of `(H, I)`, `eigenvalue_drift_max` the drift of `εI`.
    pub report: VerificationReport,
    /// `max_t ‖[D, I]‖ / (‖D‖ ‖I‖)` with `D = cd_term(εI) − H`; zero where `D` vanishes.
    pub commutator_ratio_max: f64,
    pub passed: bool,
}

/// Checks that `H0 = εI` is isospectral and that its counterdiabatic term agrees
/// with `H` up to terms commuting with `I`.
pub fn invariant_cd_identify<T, I, H>(
    invariant: &I,
    hamiltonian: &H,
    epsilon: T,
    grid: &TimeGrid<T>,
    dt: T,
) -> Result<Identification>
where
    T: Real,
    I: OperatorFn<T> + ?Sized,
    H: OperatorFn<T> + ?Sized,
{
    if epsilon == T::zero() {
        return Err(Error::InvalidArgument("epsilon must be nonzero".into()));
    }
    let mut report = VerificationReport::empty();
    report.residual_max = invariant_residual(hamiltonian, invariant, grid)?.as_f64();
    let h0 = |t: T| invariant.at(t).map(|op| op.scale(epsilon));
    let first = h0(grid.t0())?.eigenvalues();
    let mut drift = T::zero();
    let mut ratio = T::zero();
    for (k, t) in grid.nodes().into_iter().enumerate() {
        let inv = invariant.at(t)?;
        let ev = inv.scale(epsilon).eigenvalues();
        for (a, b) in ev.iter().zip(&first) {
            drift = drift.max((*a - *b).abs());
        }
        // Keep the difference stencil inside the grid span.
        let lo = t - grid.t0();
        let hi = grid.tf() - t;
        let step = dt.min(lo.max(T::zero())).min(hi.max(T::zero()));
        if step <= T::zero() {
            continue;
        }
        let h1 = match cd_term(&h0, t, step) {
            Ok(h1) => h1,
            Err(Error::Degenerate { .. }) => {
                report
                    .warnings
                    .push(format!("epsilon*I degenerate at node {k}; no counterdiabatic term there"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let d = h1 - hamiltonian.at(t)?;
        let dn = d.hs_norm();
        if dn > T::zero() {
            let comm = linalg::frobenius(&linalg::commutator_raw(d.matrix(), inv.matrix()));
            ratio = ratio.max(comm / (dn * inv.hs_norm()));
        }
    }
    report.eigenvalue_drift_max = drift.as_f64();
    let passed = drift <= T::tol(IDENTIFY_DRIFT_TOL) && ratio <= T::tol(IDENTIFY_COMMUTATOR_TOL);
    if drift > T::tol(IDENTIFY_DRIFT_TOL) {
        report
            .warnings
            .push(format!("spectrum of epsilon*I drifts by {:.3e}", drift.as_f64()));
    }
    Ok(Identification {
        report,
        commutator_ratio_max: ratio.as_f64(),
        passed,
    })
}

/// Which norm [`variational_cd`] minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    /// `‖i∂_t H0 − [H1, H0]‖_HS`.
    #[default]
    Inner,
    /// `‖[H0, i∂_t H0 − [H1, H0]]‖_HS`, the full left-hand side of the commutator relation.
    Commutator,
}

/// Result of [`variational_cd`].
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalFit<T: Real> {
    pub coeffs: Vec<T>,
    /// Minimized objective value.
    pub objective: T,
    /// `‖[H0, i∂_t H0 − [H1, H0]]‖_HS` of the fitted `H1`.
    pub h01_residual: T,
    pub rank: usize,
    pub h1: HermitianOperator<T>,
    pub warnings: Vec<String>,
}

/// Stacks real and imaginary parts column-major.
fn flatten<T: Real>(m: &CMatrix<T>) -> impl Iterator<Item = T> + '_ {
    m.iter().map(|z| z.re).chain(m.iter().map(|z| z.im))
}

/// Least-squares `H1 = Σ c_μ X_μ` over a Hermitian ansatz; `c` is real.
///
/// A rank-deficient system (for instance an ansatz containing operators that
/// commute with `H0`) yields the minimum-norm coefficients and a warning.
pub fn variational_cd<T, F>(h0: &F, ansatz: &BasisSet<T>, t: T, dt: T, objective: Objective) -> Result<VariationalFit<T>>
where
    T: Real,
    F: OperatorFn<T> + ?Sized,
{
    let a = h0.at(t)?;
    if a.dim() != ansatz.dim() {
        return Err(Error::Shape(format!(
            "ansatz dimension {} does not match H0 dimension {}",
            ansatz.dim(),
            a.dim()
        )));
    }
    let hdot = central_rate(h0, t, dt)?;
    let i = imag_unit::<T>();
    let apply = |m: CMatrix<T>| match objective {
        Objective::Inner => m,
        Objective::Commutator => linalg::commutator_raw(a.matrix(), &m),
    };
    let target = apply(hdot.matrix().map(|z| z * i));
    let columns: Vec<CMatrix<T>> = ansatz
        .operators()
        .iter()
        .map(|x| apply(linalg::commutator_raw(x.matrix(), a.matrix())))
        .collect();
    let rows = 2 * a.dim() * a.dim();
    let mut design = DMatrix::zeros(rows, columns.len());
    for (mu, col) in columns.iter().enumerate() {
        for (r, v) in flatten(col).enumerate() {
            design[(r, mu)] = v;
        }
    }
    let rhs = DVector::from_iterator(rows, flatten(&target));
    let (c, rank) = linalg::min_norm_lstsq(&design, &rhs, T::lit(VARIATIONAL_RCOND));
    let mut warnings = Vec::new();
    if rank < columns.len() {
        warnings.push(format!(
            "ansatz is rank deficient ({rank} of {}); minimum-norm coefficients returned",
            columns.len()
        ));
    }
    let coeffs: Vec<T> = c.iter().copied().collect();
    let h1 = ansatz.reconstruct(&coeffs)?;
    let objective_value = (&design * &c - &rhs).norm();
    let inner = h01_inner(&a, &hdot, h1.matrix());
    let h01 = linalg::frobenius(&linalg::commutator_raw(a.matrix(), &inner));
    Ok(VariationalFit {
        coeffs,
        objective: objective_value,
        h01_residual: h01,
        rank,
        h1,
        warnings,
    })
}
