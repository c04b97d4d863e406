//! Congestion-focused loss weighting: slow cells are where waves live, so
//! residuals there count more than in free flow.

use candle_core::{Device, Tensor};
use wavex_core::SpeedField;

use crate::{DiffusionError, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightConfig {
    /// Speeds below this (mph) take the heavy branch.
    pub critical_speed_mph: f64,
    /// Weight of the congested branch; free flow gets `1 - omega`.
    pub omega: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig { critical_speed_mph: 16.0, omega: 0.8 }
    }
}

impl WeightConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(DiffusionError::InvalidArgument(format!(
                "omega must lie in (0, 1), got {}",
                self.omega
            )));
        }
        if !(self.critical_speed_mph > 0.0) || !self.critical_speed_mph.is_finite() {
            return Err(DiffusionError::InvalidArgument(format!(
                "critical speed must be positive, got {}",
                self.critical_speed_mph
            )));
        }
        Ok(())
    }
}

/// Per-cell weights for raw mph values: `omega` strictly below the
/// critical speed, `1 - omega` at or above it.
pub fn weight_values(speeds_mph: &[f64], cfg: &WeightConfig) -> Vec<f64> {
    speeds_mph
        .iter()
        .map(|v| if *v < cfg.critical_speed_mph { cfg.omega } else { 1.0 - cfg.omega })
        .collect()
}

/// Weights for a dense ground-truth field (mph, pre-normalization).
pub fn weight_mask(field: &SpeedField, cfg: &WeightConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !field.is_dense() {
        return Err(DiffusionError::InvalidArgument(
            "weights need a dense target; gap-fill the field before weighting".into(),
        ));
    }
    Ok(weight_values(field.values(), cfg))
}

/// Same weights as a `(1, t_bins, s_bins)` tensor, ready to stack into a
/// training batch.
pub fn weight_tensor(field: &SpeedField, cfg: &WeightConfig, device: &Device) -> Result<Tensor> {
    let w = weight_mask(field, cfg)?;
    let spec = field.spec();
    let data: Vec<f32> = w.iter().map(|x| *x as f32).collect();
    Ok(Tensor::from_vec(data, (1, spec.t_bins, spec.s_bins), device)?)
}
