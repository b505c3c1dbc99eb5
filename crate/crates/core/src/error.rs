use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix does not have the dimension an operation expects.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A constraint row has (numerically) zero norm.
    #[error("constraint row {row} has zero norm")]
    ZeroRow { row: usize },

    /// A matrix or vector entry is NaN or infinite.
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    /// A point that must be feasible is not.
    #[error("point is not feasible (violation {violation:.3e})")]
    Infeasible { violation: f64 },

    /// The rows selected for an equality subsystem are linearly dependent;
    /// the subset is redundant and should be skipped.
    #[error("constraint subset is rank deficient (rank {rank} of {rows} rows)")]
    RankDeficient { rank: usize, rows: usize },

    /// Dykstra's projection did not meet its convergence criterion, which
    /// usually means the intersection is empty.
    #[error("projection did not converge in {max_iter} iterations (violation {violation:.3e}); the intersection may be empty")]
    ProjectionStalled { max_iter: usize, violation: f64 },

    /// An argument is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    /// An iterative kernel hit its iteration budget before reaching its
    /// tolerance.
    #[error("iteration budget exhausted in {0}")]
    Exhausted(&'static str),

    /// File output failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
