//! Core types for freeway speed-field reconstruction: space-time grids,
//! speed fields with validity masks, coarse sensor series, vehicle
//! trajectories, Edie-style aggregation, speed scaling, and the on-disk
//! exchange formats (binary field files and CSVs).
//!
//! Conventions used throughout the workspace:
//! - time is seconds, space is miles, speed is miles per hour;
//! - grids are time-major: cell `(i, j)` is time bin `i`, space bin `j`;
//! - space bins count outward from the grid origin *in the direction of
//!   travel*, so upstream is always toward smaller `j`.

pub mod edie;
pub mod grid;
pub mod io;
pub mod scale;

pub use edie::{edie_aggregate, EdieOutput, RejectedTrajectory};
pub use grid::{ChannelGrid, CoarseObs, CoarseSeries, GridSpec, SpeedField, Trajectory, TrajectorySample};
pub use scale::{clip_speeds, denormalize, normalize, V_MAX_MPH};

/// Errors shared by the core data types and codecs.
#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A malformed binary field file; `offset` is the byte position of the
    /// first inconsistency.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// A malformed CSV row; `line` is 1-based and counts the header.
    #[error("csv error at line {line}: {message}")]
    CsvRow { line: u64, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// An internal invariant was violated; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
