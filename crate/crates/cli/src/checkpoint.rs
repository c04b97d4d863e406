//! Checkpoint directories: everything needed to rebuild a trained model
//! and sample from it — architecture, schedule recipe, loss weights,
//! conditioning statistics, and the weights themselves.

use std::collections::BTreeSet;
use std::path::Path;

use candle_core::{DType, Device};
use serde::{Deserialize, Serialize};
use wavex_denoiser::{DenoiserConfig, UNet};
use wavex_diffusion::{ChannelStats, FitReport, ScheduleConfig, WeightConfig};

use crate::{CliError, Result};

pub const WEIGHTS_FILE: &str = "weights.safetensors";
pub const CONFIG_FILE: &str = "config.json";
pub const REPORT_FILE: &str = "training_report.json";

/// The model-defining slice of a run, frozen into the checkpoint so
/// sampling never depends on the current config file agreeing with the
/// one used at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointConfig {
    pub denoiser: DenoiserConfig,
    /// Schedule the model was trained against.
    pub schedule: ScheduleConfig,
    pub weights: WeightConfig,
    /// Train-split conditioning statistics; sampling must standardize
    /// with these exact values.
    pub stats: ChannelStats,
    pub seed: u64,
}

pub fn save(dir: &Path, cfg: &CheckpointConfig, net: &UNet, report: &FitReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(cfg)
        .map_err(|e| CliError::data(format!("serialize checkpoint config: {e}")))?;
    std::fs::write(dir.join(CONFIG_FILE), text + "\n")?;
    net.varmap()
        .save(dir.join(WEIGHTS_FILE))
        .map_err(|e| CliError::data(format!("write weights: {e}")))?;
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::data(format!("serialize training report: {e}")))?;
    std::fs::write(dir.join(REPORT_FILE), text + "\n")?;
    Ok(())
}

/// Rebuilds the network and fills it with the stored weights. Name sets
/// must match exactly; a drifted architecture fails loudly instead of
/// sampling from a half-initialized model.
pub fn load(dir: &Path, device: &Device) -> Result<(UNet, CheckpointConfig)> {
    let cfg_path = dir.join(CONFIG_FILE);
    let weights_path = dir.join(WEIGHTS_FILE);
    crate::data::require_files(&[cfg_path.clone(), weights_path.clone()])?;

    let text = std::fs::read_to_string(&cfg_path)?;
    let cfg: CheckpointConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("bad checkpoint config {}: {e}", cfg_path.display())))?;

    let net = UNet::build(cfg.denoiser.clone(), cfg.seed, device, DType::F32)?;
    let stored = candle_core::safetensors::load(&weights_path, device)
        .map_err(|e| CliError::data(format!("read weights {}: {e}", weights_path.display())))?;

    let vars = net.varmap().data().lock().expect("weight store poisoned");
    let model_names: BTreeSet<&String> = vars.keys().collect();
    let stored_names: BTreeSet<&String> = stored.keys().collect();
    if model_names != stored_names {
        let missing: Vec<&str> =
            model_names.difference(&stored_names).map(|s| s.as_str()).collect();
        let extra: Vec<&str> =
            stored_names.difference(&model_names).map(|s| s.as_str()).collect();
        return Err(CliError::data(format!(
            "weights file does not match the architecture (missing: [{}], unexpected: [{}])",
            missing.join(", "),
            extra.join(", ")
        )));
    }
    for (name, var) in vars.iter() {
        var.set(&stored[name])
            .map_err(|e| CliError::data(format!("weight {name} rejected: {e}")))?;
    }
    drop(vars);

    Ok((net, cfg))
}
