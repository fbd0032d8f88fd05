use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("missing measurement: event {event_index} has time_running = 0")]
    MissingMeasurement { event_index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("insufficient data: need at least {needed} {what}, got {got}")]
    Insufficient {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown trial id {0}")]
    UnknownTrial(u64),

    #[error("malformed series name {0:?}")]
    MalformedSeries(String),

    #[error("conflicting value for existing point in series {series:?} at t={t}")]
    Conflict { series: String, t: f64 },

    #[error("invalid range: t0 {t0} > t1 {t1}")]
    InvalidRange { t0: f64, t1: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
