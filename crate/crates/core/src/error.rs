use alloc::string::String;

/// Errors reported by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown site `{0}`")]
    UnknownSite(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("singular geometry: {0}")]
    SingularGeometry(String),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("Krylov propagation did not converge (achieved residual {residual:.3e}, tolerance {tol:.3e})")]
    KrylovNotConverged { residual: f64, tol: f64 },
    #[error("outside the regime of the analytic model: {0}")]
    OutOfRegime(String),
    #[error("sensitivity diverges at T = {0:.6e} s (signal does not depend on k)")]
    DivergentSensitivity(f64),
    #[error("sensitivity minimum lies on the grid boundary at T = {0:.6e} s")]
    BoundaryOptimum(f64),
    #[error("rate fit failed: {0}")]
    FitFailure(String),
    #[error("pulse spacing too long for a principal logarithm: {0}")]
    StepTooLong(String),
}

pub type Result<T> = core::result::Result<T, Error>;
