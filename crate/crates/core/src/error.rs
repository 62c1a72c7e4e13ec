//! Error types shared across the simulator.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument left the mathematical domain of an operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A query fell outside the range covered by a dataset grid.
    #[error("range error in {op}: {msg}")]
    Range { op: &'static str, msg: String },

    /// A parameter combination violates a model invariant.
    #[error("invalid parameter in {op}: {msg}")]
    Parameter { op: &'static str, msg: String },

    /// A dataset file failed validation. Location is 1-based where known.
    #[error("dataset error in {path}{}: {msg}", fmt_loc(*.row, .column))]
    Data {
        path: String,
        row: Option<usize>,
        column: Option<String>,
        msg: String,
    },

    /// Scenario configuration failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

fn fmt_loc(row: Option<usize>, column: &Option<String>) -> String {
    match (row, column) {
        (Some(r), Some(c)) => format!(" (row {r}, column {c})"),
        (Some(r), None) => format!(" (row {r})"),
        (None, Some(c)) => format!(" (column {c})"),
        (None, None) => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub(crate) fn range(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Range { op, msg: msg.into() }
    }

    pub(crate) fn parameter(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Parameter { op, msg: msg.into() }
    }

    pub(crate) fn data(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Data { path: path.into(), row: None, column: None, msg: msg.into() }
    }

    pub(crate) fn data_at(
        path: impl Into<String>,
        row: Option<usize>,
        column: Option<String>,
        msg: impl Into<String>,
    ) -> Self {
        Error::Data { path: path.into(), row, column, msg: msg.into() }
    }
}
