use thiserror::Error;

/// Errors reported by simulator operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max |A - A\u{2020}| entry = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("eigensolver failed to converge for a {dim}x{dim} matrix")]
    EigenFailed { dim: usize },

    /// Fock-space truncation too small: the evolved state carries
    /// non-negligible weight on the top two retained photon numbers.
    #[error(
        "truncation failure: tail mass {tail_mass:.3e} on Fock indices \
         {{{}, {}}} exceeds tolerance {tolerance:.1e}",
        n_max - 1,
        n_max
    )]
    Truncation {
        tail_mass: f64,
        n_max: usize,
        tolerance: f64,
    },

    #[error("conditional state undefined: outcome probability {probability:.3e} is below 1e-14")]
    UndefinedConditional { probability: f64 },

    #[error("state is not normalized: | \u{2016}\u{3c8}\u{2016} - 1 | = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    #[error("invalid phase-space grid: {reason}")]
    InvalidGrid { reason: String },

    #[error("perturbative order {order} unsupported (implemented orders are 0..=4)")]
    UnsupportedOrder { order: usize },

    #[error("invalid sweep specification: {reason}")]
    InvalidSweep { reason: String },

    #[error("invalid parameters: {reason}")]
    InvalidParams { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
