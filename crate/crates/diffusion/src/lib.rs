//! Conditional denoising-diffusion core: the noise schedule, forward
//! corruption, the congestion-weighted training objective, and the
//! iterative-refinement sampler that turns Gaussian noise into a speed
//! field, guided by an upsampled coarse conditioning stack.

mod corrupt;
mod norm;
mod sampler;
mod schedule;
mod train;
mod weight;

pub use corrupt::{forward_sample, gaussian_like, DiffusionSample, GammaSampling};
pub use norm::{standardize_channels, ChannelStats};
pub use sampler::{refine_step, sample, sample_field};
pub use schedule::{
    build_schedule, NoiseSchedule, ScheduleConfig, DEFAULT_BETA_END, DEFAULT_BETA_START,
    DEFAULT_STEPS,
};
pub use train::{fit, training_step, EpsilonModel, FitConfig, FitReport, TrainBatch};
pub use weight::{weight_mask, weight_tensor, weight_values, WeightConfig};

/// Errors produced by the diffusion stack.
#[derive(Debug, thiserror::Error)]
pub enum DiffusionError {
    #[error("{0}")]
    InvalidArgument(String),
    /// Training or sampling produced a non-finite number; the message says
    /// where, so the schedule or learning rate can be inspected.
    #[error("numerical fault: {0}")]
    Numerical(String),
    #[error(transparent)]
    Core(#[from] wavex_core::CoreError),
    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
}

pub type Result<T> = std::result::Result<T, DiffusionError>;
