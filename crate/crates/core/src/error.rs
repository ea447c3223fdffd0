use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("range error: {0}")]
    Range(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("integration failed at t = {t}: {reason}")]
    Integration {
        t: f64,
        state: Vec<f64>,
        reason: String,
    },
    #[error("solver did not converge: {0}")]
    Solver(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("projection failed: {0}")]
    Projection(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("shooting search failed on bracket [{lo}, {hi}]: {reason}")]
    Search { lo: f64, hi: f64, reason: String },
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("missing dependency: {0}")]
    Dependency(String),
}

impl Error {
    /// Stable machine readable tag used in JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Range(_) => "range",
            Error::Domain(_) => "domain",
            Error::Contract(_) => "contract",
            Error::Integration { .. } => "integration",
            Error::Solver(_) => "solver",
            Error::Numerical(_) => "numerical",
            Error::Projection(_) => "projection",
            Error::Regime(_) => "regime",
            Error::Search { .. } => "search",
            Error::Consistency(_) => "consistency",
            Error::Dependency(_) => "dependency",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
