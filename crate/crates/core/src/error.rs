use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("susceptibility {value} for node {node} is outside [0, 1]")]
    SusceptibilityOutOfRange { node: String, value: f64 },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("node index {0} is out of range for a graph with {1} nodes")]
    InvalidNode(usize, usize),

    #[error("{0} requires a seed node")]
    MissingSeed(&'static str),

    #[error("contextualization is staged by phi but no intervention time was resolved")]
    MissingContextTime,

    #[error("no node has susceptibility 1 (maximum present: {max_susceptibility})")]
    NoFullySusceptibleNode { max_susceptibility: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("survey item {item} has no {condition} responses")]
    MissingCondition { item: String, condition: &'static str },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

/// Checks that `value` lies in the closed unit interval.
pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        })
    }
}
