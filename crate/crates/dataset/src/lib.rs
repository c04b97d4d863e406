//! Corpus management: sliding-window augmentation, day-level split
//! manifests, CSV/field ingestion with per-row validation, and corpus-wide
//! traffic statistics.

mod ingest;
mod split;
mod stats;
mod windows;

pub use ingest::{ingest_field, ingest_rds, IngestReport, RowIssue};
pub use split::{Split, SplitManifest};
pub use stats::{corpus_stats, field_summary, CorpusStats, FieldSummary};
pub use windows::sliding_windows;

/// Errors produced by dataset handling.
#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A split manifest violated its invariants (overlapping splits,
    /// duplicated days, unparsable JSON).
    #[error("split manifest: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] wavex_core::CoreError),
}

pub type Result<T> = std::result::Result<T, DatasetError>;
