//! Orchestration for the reconstruction toolkit: config-driven subcommands
//! tying simulation, preprocessing, training, sampling, baselines, and
//! evaluation together into reproducible, manifest-stamped runs.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod data;
pub mod manifest;

use std::fmt::Display;

/// Failure classes with fixed process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or contradictory configuration. Exit code 2.
    Config(String),
    /// Missing or invalid input data. Exit code 3.
    Data(String),
    /// A numerical fault while training or sampling. Exit code 4.
    Numerical(String),
}

impl CliError {
    pub fn config(msg: impl Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn data(msg: impl Display) -> Self {
        CliError::Data(msg.to_string())
    }

    pub fn numerical(msg: impl Display) -> Self {
        CliError::Numerical(msg.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<wavex_core::CoreError> for CliError {
    fn from(e: wavex_core::CoreError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<wavex_diffusion::DiffusionError> for CliError {
    fn from(e: wavex_diffusion::DiffusionError) -> Self {
        match e {
            wavex_diffusion::DiffusionError::Numerical(m) => CliError::Numerical(m),
            wavex_diffusion::DiffusionError::Tensor(t) => CliError::Numerical(t.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<wavex_dataset::DatasetError> for CliError {
    fn from(e: wavex_dataset::DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<wavex_synth::SynthError> for CliError {
    fn from(e: wavex_synth::SynthError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<wavex_baselines::BaselineError> for CliError {
    fn from(e: wavex_baselines::BaselineError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<wavex_eval::EvalError> for CliError {
    fn from(e: wavex_eval::EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<wavex_analysis::AnalysisError> for CliError {
    fn from(e: wavex_analysis::AnalysisError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<wavex_denoiser::DenoiserError> for CliError {
    fn from(e: wavex_denoiser::DenoiserError) -> Self {
        match e {
            wavex_denoiser::DenoiserError::Tensor(t) => CliError::Numerical(t.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<candle_core::Error> for CliError {
    fn from(e: candle_core::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
