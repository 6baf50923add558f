use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad class of an error, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed data, schema violations, unparsable inputs.
    Data,
    /// A checked precondition did not hold (ordering, staleness, missing entity).
    Precondition,
    /// Filesystem failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("record {ordinal}, field `{field}`: {detail}")]
    SchemaMismatch {
        ordinal: usize,
        field: String,
        detail: String,
    },

    #[error("ordinal {ordinal} out of range for table of {len} records")]
    OutOfRange { ordinal: usize, len: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {detail}")]
    Format { path: PathBuf, line: usize, detail: String },

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("field `{field}` has type {actual}, expected {expected}")]
    WrongColumnType {
        field: String,
        actual: String,
        expected: String,
    },

    #[error("table has no date column")]
    NoDateColumn,

    #[error("table has no key column")]
    NoKeyColumn,

    #[error("table has no `{0}` column designated")]
    MissingDesignation(&'static str),

    #[error("table is not sorted by `{field}`: ordinal {ordinal} precedes its predecessor")]
    UnsortedTable { field: String, ordinal: usize },

    #[error("index built for {indexed_len} records at commit {indexed_commit}, table has {table_len} records at commit {table_commit}")]
    StaleIndex {
        indexed_len: usize,
        indexed_commit: u64,
        table_len: usize,
        table_commit: u64,
    },

    #[error("indices not strictly ascending at position {position}")]
    NonAscendingIndices { position: usize },

    #[error("pairs carry more than one key ({first} and {other})")]
    MixedKeys { first: String, other: String },

    #[error("no entity with key {0}")]
    NoSuchEntity(String),

    #[error("timestamp {requested} precedes the current record's {current}")]
    NonMonotoneTimestamp { current: String, requested: String },

    #[error("schemas are not sync-compatible: {0}")]
    SchemaIncompatible(String),

    #[error("source is not sorted by `{field}`: ordinal {ordinal} precedes its predecessor")]
    UnsortedSource { field: String, ordinal: usize },

    #[error("topology contains a cycle through `{0}`")]
    CyclicTopology(String),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("missing table `{0}`")]
    MissingTable(String),

    #[error("invalid cron expression: field {field} ({name}): {reason}")]
    InvalidCronExpression {
        field: usize,
        name: &'static str,
        reason: String,
    },

    #[error("schedule does not fire within the search horizon after {after}")]
    NoFireWithinHorizon { after: String },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("duplicate job name `{0}`")]
    DuplicateJob(String),

    #[error("approaches disagree: {0}")]
    Disagreement(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable variant name, printed by front ends next to the message.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidSchema(_) => "InvalidSchema",
            Error::SchemaMismatch { .. } => "SchemaMismatch",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::Io { .. } => "IOError",
            Error::Format { .. } => "FormatError",
            Error::UnknownField(_) => "UnknownField",
            Error::WrongColumnType { .. } => "WrongColumnType",
            Error::NoDateColumn => "NoDateColumn",
            Error::NoKeyColumn => "NoKeyColumn",
            Error::MissingDesignation(_) => "MissingDesignation",
            Error::UnsortedTable { .. } => "UnsortedTable",
            Error::StaleIndex { .. } => "StaleIndex",
            Error::NonAscendingIndices { .. } => "NonAscendingIndices",
            Error::MixedKeys { .. } => "MixedKeys",
            Error::NoSuchEntity(_) => "NoSuchEntity",
            Error::NonMonotoneTimestamp { .. } => "NonMonotoneTimestamp",
            Error::SchemaIncompatible(_) => "SchemaIncompatible",
            Error::UnsortedSource { .. } => "UnsortedSource",
            Error::CyclicTopology(_) => "CyclicTopology",
            Error::InvalidTopology(_) => "InvalidTopology",
            Error::MissingTable(_) => "MissingTable",
            Error::InvalidCronExpression { .. } => "InvalidCronExpression",
            Error::NoFireWithinHorizon { .. } => "NoFireWithinHorizon",
            Error::InvalidValue(_) => "InvalidValue",
            Error::DuplicateJob(_) => "DuplicateJob",
            Error::Disagreement(_) => "Disagreement",
            Error::Json(_) => "FormatError",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            Error::InvalidSchema(_)
            | Error::SchemaMismatch { .. }
            | Error::Format { .. }
            | Error::UnknownField(_)
            | Error::WrongColumnType { .. }
            | Error::NonAscendingIndices { .. }
            | Error::MixedKeys { .. }
            | Error::SchemaIncompatible(_)
            | Error::InvalidTopology(_)
            | Error::InvalidCronExpression { .. }
            | Error::InvalidValue(_)
            | Error::DuplicateJob(_)
            | Error::Json(_) => ErrorClass::Data,
            Error::OutOfRange { .. }
            | Error::NoDateColumn
            | Error::NoKeyColumn
            | Error::MissingDesignation(_)
            | Error::UnsortedTable { .. }
            | Error::StaleIndex { .. }
            | Error::NoSuchEntity(_)
            | Error::NonMonotoneTimestamp { .. }
            | Error::UnsortedSource { .. }
            | Error::CyclicTopology(_)
            | Error::MissingTable(_)
            | Error::NoFireWithinHorizon { .. }
            | Error::Disagreement(_) => ErrorClass::Precondition,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
