//! Corridor-level analysis on reconstructed speed fields: virtual probe
//! vehicles, travel-time statistics, and stop-and-go wave speed estimation.
//!
//! Everything in this crate consumes a dense [`wavex_core::SpeedField`]; the
//! field is treated as ground truth and integrated or scanned directly, so the
//! same routines apply to reference fields and to reconstructions.

mod probe;
mod travel;
mod waves;

pub use probe::{deploy_virtual_vehicles, DeployConfig, ProbeSample, Sampling, VirtualTrajectory};
pub use travel::{
    compare_travel_times, travel_times, BucketComparison, BucketStats, TravelTimeTable,
    SPEED_BUCKETS_MPH,
};
pub use waves::{
    wave_crossings, wave_crossings_all, wave_speed_estimate, CrossingKind, WaveCrossing, WaveEvent,
    WaveKindStats, WaveSpeedReport, DEFAULT_CHAIN_GATE_MI, DEFAULT_CRITICAL_SPEED_MPH,
};

/// Errors produced by the analysis routines.
#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    /// An argument was structurally invalid (bad spacing, empty input, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The input field has masked cells. Virtual vehicles integrate through
    /// every cell they touch, so the caller must densify (gap-fill) first.
    #[error(
        "speed field has {missing} masked cells; densify the field (e.g. with a \
         gap-filling baseline) before deploying virtual vehicles"
    )]
    SparseField { missing: usize },

    /// Wave chaining found no event with at least two linked crossings.
    #[error("no waves detected")]
    NoWavesDetected,

    #[error(transparent)]
    Core(#[from] wavex_core::CoreError),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;
