//! Persistence: a sorted, line-oriented text format for model graphs and a
//! little-endian binary format for compiled flight paths.

mod flight_file;
mod model_file;
mod text;

pub use flight_file::{
    decode_flight_paths, encode_flight_paths, quantize, read_flight_paths, write_flight_paths, FLIGHT_MAGIC,
    FLIGHT_VERSION,
};
pub use model_file::{format_model, parse_model, read_model, write_model, MODEL_MAGIC, MODEL_VERSION};

use crate::model::ValidationReport;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unknown schema reference '{0}'")]
    UnknownSchemaReference(String),
    #[error("refusing to save an invalid model:\n{0}")]
    InvalidModel(Box<ValidationReport>),
    #[error("bad magic {0:?}, expected \"FLSP\"")]
    BadMagic([u8; 4]),
    #[error("unsupported flight file version {0}")]
    VersionUnsupported(u16),
    #[error("file truncated at byte {offset}")]
    TruncatedFile { offset: usize },
    #[error("unexpected data after byte {offset}")]
    TrailingBytes { offset: usize },
    #[error("byte {offset}: {reason}")]
    InvalidFlightData { offset: usize, reason: String },
    #[error("flight paths are malformed: {0}")]
    InvalidFlightPaths(String),
}

impl StoreError {
    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        StoreError::Parse {
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        StoreError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
