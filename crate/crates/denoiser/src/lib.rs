//! Conditional U-Net noise predictor for the diffusion reconstructor.
//!
//! The network takes the noisy speed window stacked with the upsampled
//! sensor channels and predicts the Gaussian noise component at a given
//! corruption level. The corruption level enters every residual block
//! through a sinusoidal embedding of `logit(gamma)` followed by a small
//! MLP, applied as a scale-shift on the normalized activations.
//!
//! Weight creation is deterministic: after the graph is assembled, every
//! variable is re-initialised from a seeded stream in name order, so two
//! builds with the same seed produce bit-identical networks regardless of
//! thread scheduling.

mod config;
mod embed;
mod init;
mod unet;

pub use config::DenoiserConfig;
pub use embed::{gamma_embedding, GammaEmbed};
pub use unet::UNet;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DenoiserError {
    #[error("invalid denoiser config: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
}

pub type Result<T> = std::result::Result<T, DenoiserError>;
