use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The query is well formed but lies outside the hypotheses of the requested rate result.
    #[error("outside hypotheses: {0}")]
    OutsideHypotheses(String),

    /// The query hits a degenerate value (division by zero, empty range, ...).
    #[error("degenerate value: {0}")]
    Degenerate(String),

    #[error("index scheme mismatch: expected {expected}, found {found}")]
    SchemeMismatch { expected: String, found: String },

    #[error("{what} did not converge (achieved residual {residual:.3e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("no sample fell inside the ball of radius {eps} ({samples} samples)")]
    ZeroHits { eps: f64, samples: usize },

    #[error("estimated probability {p_hat:.3e} is below the resolvable floor {p_min:.1e}")]
    BelowResolution { p_hat: f64, p_min: f64 },

    #[error("posterior grid leaks mass {mass:.3e} outside its support after widening")]
    GridResolution { mass: f64 },

    #[error("non-finite log-posterior at coefficient {index}: {value}")]
    NonFiniteLogPosterior { index: usize, value: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive",
        })
    }
}
