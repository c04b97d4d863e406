//! Classical reconstruction baselines: the adaptive smoothing method (ASM)
//! with its free-flow / congested two-pass kernel, the coarse-to-fine
//! three-channel upsampler built on it, and the average / nearest / linear
//! interpolation fills.

pub mod asm;
pub mod interp;
pub mod upsample;

pub use asm::{asm_reconstruct, blend_weight, gap_fill_asm, AsmParams, ObsPoint};
pub use interp::{interp_average, interp_linear, interp_nearest};
pub use upsample::upsample_coarse;

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Every kernel contribution underflowed to zero at some cell; possible
    /// only for pathological geometry, but guarded rather than dividing by
    /// zero.
    #[error("internal error: zero total kernel weight at cell ({t_bin}, {s_bin})")]
    ZeroKernelWeight { t_bin: usize, s_bin: usize },

    #[error(transparent)]
    Core(#[from] wavex_core::CoreError),
}

pub type Result<T> = std::result::Result<T, BaselineError>;
