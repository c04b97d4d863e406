//! Synthetic paired-data generator: a string-unstable car-following
//! micro-simulation, virtual roadside sensors, and pairing of coarse sensor
//! series with fine ground-truth fields.
//!
//! The simulator stands in for a real instrumented corridor, so its output
//! units and formats match the ingestion side exactly: trajectories in
//! (seconds, miles, mph), sensor series on a 30-second-style lattice, fields
//! on the standard reconstruction grid.

mod pairs;
mod sensors;
mod sim;

pub use pairs::{make_pairs, Pair};
pub use sensors::{virtual_sensors, SensorSpec};
pub use sim::{simulate, LeadDip, SimConfig};

/// Errors produced by the synthetic generator.
#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The car-following integration produced a negative gap. This means the
    /// parameter set is outside the model's collision-free envelope (usually
    /// a too-long integration step relative to the time gap, or spawning
    /// into too small a gap).
    #[error(
        "collision at t={time_s:.2}s: vehicle {follower} ran into vehicle {leader} \
         (gap {gap_m:.2} m); the parameter set is outside the collision-free envelope"
    )]
    Collision { time_s: f64, follower: u64, leader: u64, gap_m: f64 },

    #[error(transparent)]
    Core(#[from] wavex_core::CoreError),

    #[error(transparent)]
    Baseline(#[from] wavex_baselines::BaselineError),

    #[error(transparent)]
    Dataset(#[from] wavex_dataset::DatasetError),
}

pub type Result<T> = std::result::Result<T, SynthError>;

/// Miles to meters.
pub(crate) const M_PER_MI: f64 = 1609.344;
/// Mph to meters per second.
pub(crate) const MPS_PER_MPH: f64 = 0.44704;
/// Feet to meters.
pub(crate) const M_PER_FT: f64 = 0.3048;
