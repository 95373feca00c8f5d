//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the extraction library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("geojson parse error at byte {offset}: {message}")]
    GeoJson { offset: usize, message: String },

    #[error("invalid polygon `{id}`: {reason}")]
    InvalidPolygon { id: String, reason: String },

    #[error("degenerate geometry")]
    DegenerateGeometry,

    #[error("asc parse error at line {line}: {message}")]
    AscParse { line: usize, message: String },

    #[error("no DSM coverage")]
    NoDsmCoverage,

    #[error("rank-deficient samples")]
    RankDeficient,

    #[error("no lines detected")]
    NoLinesDetected,

    #[error("empty mask")]
    EmptyMask,

    #[error("implausible tilt {0} degrees")]
    ImplausibleTilt(f64),

    #[error("registry error: {0}")]
    Registry(String),

    #[error("registry row {row}: {message}")]
    RegistryRow { row: usize, message: String },

    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("model fit error: {0}")]
    Fit(String),

    #[error("metrics error: {0}")]
    Metrics(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
