//! On-disk dataset format, map-level splitting and the end-to-end build.
//!
//! Layout of a dataset root:
//!
//! ```text
//! dataset.jsonl   one record per line, sorted by (map_id, path_index)
//! images/         <map_id>.png for every map with at least one record
//! report.txt      build status and per-stage accounting
//! manifest.json   train/validation split, written by `split`
//! ```

mod build;
mod records;
mod split;

use thiserror::Error;

use crate::render::RenderError;

pub use build::{build_dataset, build_map, derive_seed, BuildOptions, BuildReport, BuildStatus, MapOutcome, MapSkip};
pub use records::{
    normalize_4dp, normalize_path, read_records, write_records, DatasetRecord, MaskVerdictRecord, Provenance,
    QueryRecord, STORED_DECIMALS,
};
pub use split::{split, SplitManifest};

pub const RECORDS_FILE: &str = "dataset.jsonl";
pub const REPORT_FILE: &str = "report.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const IMAGES_DIR: &str = "images";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: invalid record: {message}")]
    Invalid { line: usize, message: String },
    #[error("line {line}: image `{path}` does not exist")]
    MissingImage { line: usize, path: String },
    #[error("split: {0}")]
    Split(String),
    #[error("all {maps} maps failed; see the report for reasons")]
    AllMapsFailed { maps: usize },
    #[error("build interrupted after {processed} maps")]
    Interrupted { processed: usize },
    #[error("invalid build options: {0}")]
    Options(String),
    #[error(transparent)]
    Render(#[from] RenderError),
}
