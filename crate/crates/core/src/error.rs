use thiserror::Error;

/// Everything that can go wrong while building or using a model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cost is unbounded at the origin and cannot be evaluated at r = 0")]
    EvalAtSingularOrigin,

    #[error("radius {r} lies outside [0, {radius}]")]
    OutOfDomain { r: f64, radius: f64 },

    #[error("integral diverges at the origin")]
    DivergentIntegral,

    #[error("declared monotonicity near the origin disagrees with the sampled derivative on (0, {eta})")]
    NotMonotoneAtOrigin { eta: f64 },

    #[error("value at the origin is infinite")]
    OriginValueInfinite,

    #[error("inconsistent origin declaration: {0}")]
    InconsistentDeclaration(String),

    #[error("policy is undefined at the origin; wrap it in an origin-delta policy")]
    PolicyUndefinedAtOrigin,

    #[error("invalid cost specification: {0}")]
    InvalidCost(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the model description rather than by
    /// runtime flags or I/O.
    pub fn is_spec_error(&self) -> bool {
        matches!(
            self,
            Error::EvalAtSingularOrigin
                | Error::DivergentIntegral
                | Error::NotMonotoneAtOrigin { .. }
                | Error::OriginValueInfinite
                | Error::InconsistentDeclaration(_)
                | Error::InvalidCost(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
