//! Error type shared across the crate.

use thiserror::Error;

/// Errors raised by parsing, validation, and the numeric guards.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input file (Hamiltonian or config-style text).
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Malformed inline specification (state string, grid string).
    #[error("{0}")]
    Malformed(String),

    /// Operator/state dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    /// Dense-backend resource guard.
    #[error("{n} qubits exceeds the dense-backend limit of {max}")]
    DimensionGuard { n: usize, max: usize },

    /// Operation requires a Hamiltonian-flagged (real-coefficient) operator.
    #[error("operator is not Hamiltonian-flagged")]
    NonHermitian,

    /// Operation undefined on the zero operator.
    #[error("zero operator: {0}")]
    ZeroOperator(&'static str),

    /// State has vanishing norm.
    #[error("state has vanishing norm")]
    ZeroNorm,

    /// The Chebyshev recursion produced an (exactly) annihilated state.
    #[error("Chebyshev state annihilated at k = {k} (norm {norm:.3e})")]
    VanishingNorm { k: usize, norm: f64 },

    /// No eigenstate with the requested particle number.
    #[error("no eigenstate with particle number {n_particles}")]
    SectorNotFound { n_particles: usize },

    /// Precondition violation on an operation argument.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
