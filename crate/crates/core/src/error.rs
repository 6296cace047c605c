use thiserror::Error;

/// Errors produced by the ballslep library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid basis index: {0}")]
    InvalidIndex(String),

    #[error("unsupported Gauss-Kronrod rule with {0} points")]
    UnsupportedRule(usize),

    #[error(
        "quadrature stopped after {subintervals} subintervals \
         (value {value:e}, error estimate {error_estimate:e}, noise floor: {noise_floor})"
    )]
    QuadratureBudget {
        value: f64,
        error_estimate: f64,
        subintervals: usize,
        /// The worst piece was already at its rounding-error floor.
        noise_floor: bool,
    },

    #[error("matrix entry {row},{col} failed: {source}")]
    Entry {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("eigensolver did not converge in block {block}")]
    NoConvergence { block: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("coefficient vector is zero")]
    ZeroCoefficients,

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
