//! Path similarity metrics and the text encodings model outputs use.

mod dtw;
mod encoding;
mod score;

use thiserror::Error;

pub use dtw::{dtw_distance, ndtw, NormalizedPath, Point};
pub use encoding::{
    decode_path, format_normalized, format_path, parse_path, CoordinateEncoding, DeltaBase, ParseMode, Precision,
    Representation,
};
pub use score::{aggregate_report, score_query, CategoryStats, FailureReason, QueryScore, ScoreReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("path is empty")]
    EmptyPath,
    #[error("ground-truth path is empty")]
    EmptyTruth,
    #[error("empty output")]
    EmptyOutput,
    #[error("unparseable output: {0}")]
    Parse(String),
    #[error("unsupported encoding: {0}")]
    Encoding(String),
}
