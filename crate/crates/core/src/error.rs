use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quantile inversion did not converge for p = {p} after {iterations} iterations")]
    NonConvergence { p: f64, iterations: usize },

    #[error("pairwise moments are undefined for a sample of size 1")]
    PairUndefined,

    #[error("invalid layer specification: {0}")]
    InvalidLayers(String),

    #[error("cannot estimate a mean from an empty sample")]
    EmptySample,

    #[error("proposal density is zero at x = {x} where the integrand has mass")]
    ZeroProposalDensity { x: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad caller input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::PairUndefined
                | Error::InvalidLayers(_)
                | Error::EmptySample
                | Error::InvalidConfig(_)
        )
    }
}
