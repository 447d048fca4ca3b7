use thiserror::Error;

/// Errors shared across the toolkit. Numerical routines prefer returning
/// these over panicking; precondition violations name the offending input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown catalog domain `{0}`")]
    UnknownDomain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is not on the boundary (|rho| = {0:.3e})")]
    NotOnBoundary(f64),

    #[error("point is not interior (rho = {0:.3e})")]
    NotInterior(f64),

    #[error("{0}")]
    Precondition(String),

    #[error("root not bracketed on the normal line within radius {0}")]
    RootNotBracketed(f64),

    #[error("dilatation ordering violated: lambda_0 = {0:.3e}")]
    OrderingViolated(f64),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("quadrature did not stabilize: last relative change {0:.3e}")]
    QuadratureUnstable(f64),

    #[error("series truncation insufficient: {0}")]
    TruncationInsufficient(String),

    #[error("iteration cap {cap} reached (residual {residual:.3e})")]
    IterationCap { cap: usize, residual: f64 },

    #[error("config parse error: {0}")]
    ConfigParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
