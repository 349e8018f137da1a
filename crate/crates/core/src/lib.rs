//! Invariant-based inverse engineering for driven quantum systems.
//!
//! Every numerical routine is generic over [`scalar::Real`] (`f32` or `f64`).
//! The aliases below fix the scalar to `f64`, which is what the CLI and the
//! acceptance suite use. Units: `ħ = m = 1`.

// `!(x > 0)` is deliberate: it also rejects NaN. Index loops walk parallel arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod counterdiabatic;
pub mod error;
pub mod fd;
pub mod flows;
pub mod interp;
pub mod invariant;
pub mod linalg;
pub mod operator;
pub mod oscillator;
pub mod propagator;
pub mod scalar;
pub mod two_level;

pub use error::{Error, Result};
pub use invariant::VerificationReport;
pub use scalar::Real;

pub type Operator = operator::HermitianOperator<f64>;
pub type Basis = operator::BasisSet<f64>;
pub type Grid = propagator::TimeGrid<f64>;
pub type State = propagator::StateVector<f64>;
pub type Coordinates = propagator::CoordinateGrid<f64>;
pub type Schedule = invariant::Schedule<f64>;
pub type Pair = invariant::ProtocolPair<f64>;
pub type Bloch = two_level::BlochSchedule<f64>;
pub type Field = two_level::FieldProtocol<f64>;
pub type Ermakov = oscillator::ErmakovSolution<f64>;
pub type Tridiagonal = flows::TridiagonalMatrix<f64>;
pub type Flow = flows::FlowTrace<f64>;
