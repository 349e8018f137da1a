use thiserror::Error;

/// Errors raised by construction, validation and integration routines.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("operator is not Hermitian: deviation {deviation:.3e} exceeds tolerance {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("basis is not orthonormal: pair ({first}, {second}) has (1/N)Tr = {overlap:.6e}")]
    NonOrthonormal {
        first: usize,
        second: usize,
        overlap: f64,
    },

    #[error("structure constants are not antisymmetric: deviation {deviation:.3e} at ({mu}, {nu}, {lambda})")]
    NotAntisymmetric {
        mu: usize,
        nu: usize,
        lambda: usize,
        deviation: f64,
    },

    #[error("state vector is not normalized: norm {norm:.12}")]
    NotNormalized { norm: f64 },

    #[error("non-finite value encountered at t = {t}")]
    Divergence { t: f64 },

    #[error("field equation inconsistent at node {node} (t = {t}): residual {residual:.3e} exceeds {tolerance:.3e}")]
    Inconsistent {
        node: usize,
        t: f64,
        residual: f64,
        tolerance: f64,
    },

    #[error("field threshold violated at node {node} (t = {t}): h = {field} but |theta_dot| = {required}; need h >= {required}")]
    Threshold {
        node: usize,
        t: f64,
        field: f64,
        required: f64,
    },

    #[error("singular parametrization at node {node} (t = {t}): {reason}")]
    Singular { node: usize, t: f64, reason: String },

    #[error("degenerate spectrum at t = {t}: levels {lower} and {upper} separated by {gap:.3e}")]
    Degenerate {
        t: f64,
        lower: usize,
        upper: usize,
        gap: f64,
    },

    #[error("phase integrand has imaginary part {imag:.3e} at node {node}; eigenvectors are not normalized or aligned")]
    PhaseAlignment { node: usize, imag: f64 },

    #[error("scale factor collapsed (b <= 0) at t = {t}")]
    Collapse { t: f64 },

    #[error("unsupported schedule: {0}")]
    UnsupportedSchedule(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
