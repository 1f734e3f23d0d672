use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<Violation>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate chain: {0}")]
    DegenerateChain(String),

    #[error("near-degenerate correlation {0}: use the univariate formula instead")]
    NearDegenerateCorrelation(f64),

    #[error("Bessel series did not converge within {0} terms")]
    SeriesCap(usize),

    /// Joint survival of a strongly drifted pair that double precision
    /// cannot resolve; carries the size of the unresolvable part.
    #[error("joint survival only resolvable to ±{0:.1e} in double precision")]
    PrecisionLoss(f64),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("degenerate survival: probability of no ruin up to the switch is numerically zero")]
    DegenerateSurvival,

    #[error("{0}")]
    Unsupported(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{method} failed at T = {horizon}: {source}")]
    Estimator {
        method: String,
        horizon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidModel(_) | Error::InvalidArgument(_) => 2,
            _ => 3,
        }
    }
}
