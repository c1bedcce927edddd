use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solvers, the simulator and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value {0} lies outside [0, 1]")]
    OutOfUnitInterval(f64),

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("epsilon must lie in (0, 1), got {0}")]
    EpsilonOutOfRange(f64),

    #[error("{0} has no closed-form P1 solution")]
    NoClosedForm(String),

    #[error("step threshold q_{k} = {threshold} lies below the empirical mean {p}")]
    StepBelowMean { k: u32, threshold: f64, p: f64 },

    #[error("invalid divergence set: {0}")]
    InvalidDivergenceSet(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("support has a single point {0}; the dual problem needs at least two")]
    DegenerateSupport(f64),

    #[error("lambda {lambda} must exceed the pole {pole}")]
    LambdaAtPole { lambda: f64, pole: f64 },

    #[error("unknown scenario preset `{0}`")]
    UnknownPreset(String),

    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),

    #[error("line {line}: {message}")]
    ScenarioParse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Configuration errors map to exit status 2, everything else to 1.
    pub fn is_config(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Csv { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value })
    }
}
