use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("query at tau={tau}h lies beyond the last knot {last}h")]
    QueryBeyondSupport { tau: f64, last: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("every snapshot was excluded for horizon {horizon_hours}h")]
    EmptyResult { horizon_hours: f64 },

    #[error("no evaluable instances at tau={tau}h")]
    NoInstances { tau: f64 },

    #[error("no comparable pairs at tau={tau}h")]
    NoPairs { tau: f64 },

    #[error("no uncensored instances")]
    NoDeaths,

    #[error("non-finite loss {loss} at epoch {epoch}")]
    NonFiniteLoss { epoch: usize, loss: f64 },

    #[error("snapshot does not belong to this synthetic cohort: {0}")]
    ScenarioMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("horizon {k} ({horizon_hours}h): {source}")]
    Horizon {
        k: usize,
        horizon_hours: f64,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }

    pub(crate) fn at_horizon(self, k: usize, horizon_hours: f64) -> Self {
        Error::Horizon {
            k,
            horizon_hours,
            source: Box::new(self),
        }
    }
}
