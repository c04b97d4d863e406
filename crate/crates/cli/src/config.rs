//! The single JSON run configuration shared by every subcommand.
//!
//! Every section mirrors a library config type so the file format and the
//! in-code defaults can never drift apart. Unknown keys anywhere in the tree
//! are a hard error, and `--set a.b.c=value` overrides are only accepted for
//! paths that already exist in the schema.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wavex_baselines::AsmParams;
use wavex_core::GridSpec;
use wavex_denoiser::DenoiserConfig;
use wavex_diffusion::{FitConfig, ScheduleConfig, WeightConfig};
use wavex_eval::MetricMode;
use wavex_synth::{SensorSpec, SimConfig};

use crate::{CliError, Result};

/// Traffic regime used when synthesizing corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Stable,
    Unstable,
}

/// Corpus synthesis settings: regime, split sizes, and the dense day grid
/// each simulated day is binned onto.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub regime: Regime,
    pub train_days: usize,
    pub val_days: usize,
    pub test_days: usize,
    /// Dense grid one simulated day is aggregated onto. Must start after
    /// enough warm-up for traffic to fill the corridor.
    pub day: GridSpec,
    /// Override of the regime's default simulated duration, seconds.
    pub duration_s: Option<f64>,
    /// Override of the standard roadside sensor layout.
    pub sensors: Option<SensorSpec>,
    /// Also write the raw vehicle trajectories per day (large files).
    pub keep_trajectories: bool,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            regime: Regime::Unstable,
            train_days: 7,
            val_days: 1,
            test_days: 2,
            day: GridSpec {
                t_bins: 450,
                s_bins: 128,
                dt_s: 4.0,
                dx_mi: 0.03125,
                t0_s: 600.0,
                x0_mi: 0.0,
                direction: 1,
            },
            duration_s: None,
            sensors: None,
            keep_trajectories: false,
        }
    }
}

impl SimulateSection {
    /// The micro-sim config for one day, seeded per day index.
    pub fn sim_config(&self, day_seed: u64) -> SimConfig {
        let mut cfg = match self.regime {
            Regime::Stable => SimConfig::stable(day_seed),
            Regime::Unstable => SimConfig::unstable(day_seed),
        };
        if let Some(d) = self.duration_s {
            cfg.duration_s = d;
        }
        cfg
    }

    pub fn sensor_spec(&self, lane: u32) -> SensorSpec {
        self.sensors.clone().unwrap_or_else(|| SensorSpec::standard(lane))
    }

    pub fn total_days(&self) -> usize {
        self.train_days + self.val_days + self.test_days
    }
}

/// Sliding-window extraction along the time axis of each day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowsSection {
    pub window_bins: usize,
    /// Stride for training windows. Validation and test windows always use
    /// non-overlapping strides so their metrics never double-count cells.
    pub step_bins: usize,
    /// Windows stacked into one optimizer step.
    pub batch_windows: usize,
}

impl Default for WindowsSection {
    fn default() -> Self {
        WindowsSection { window_bins: 128, step_bins: 10, batch_windows: 8 }
    }
}

/// Metric settings for `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    pub mape_floor_mph: f64,
    pub mode: MetricMode,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection { mape_floor_mph: 1.0, mode: MetricMode::Pooled }
    }
}

/// Virtual-probe deployment and wave chaining settings for `traveltime`
/// and `waves`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Departure spacing of virtual probe vehicles, seconds.
    pub probe_spacing_s: f64,
    /// Maximum spatial gap when chaining wave crossings, miles.
    pub chain_gate_mi: f64,
    /// Speed threshold separating congested from free cells, mph.
    pub critical_speed_mph: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            probe_spacing_s: 10.0,
            chain_gate_mi: wavex_analysis::DEFAULT_CHAIN_GATE_MI,
            critical_speed_mph: wavex_analysis::DEFAULT_CRITICAL_SPEED_MPH,
        }
    }
}

/// The whole run configuration. One file drives every subcommand; each
/// command reads the sections it needs and ignores the rest, so a single
/// config describes a full experiment end to end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed. Day seeds, training draws, and sampler noise all derive
    /// from it, so equal configs give bit-identical artifacts.
    pub seed: u64,
    pub lane: u32,
    pub simulate: SimulateSection,
    pub windows: WindowsSection,
    /// Smoothing used both for conditioning channels and the `asm` baseline.
    pub asm: AsmParams,
    /// Noise schedule used at training time.
    pub schedule: ScheduleConfig,
    /// Shorter schedule used by the sampler; its terminal noise level is
    /// matched to the training schedule's.
    pub sampling: ScheduleConfig,
    pub weights: WeightConfig,
    pub denoiser: DenoiserConfig,
    pub fit: FitConfig,
    pub evaluate: EvaluateSection,
    pub analysis: AnalysisSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            lane: 1,
            simulate: SimulateSection::default(),
            windows: WindowsSection::default(),
            asm: AsmParams::roadside(),
            schedule: ScheduleConfig::default(),
            sampling: ScheduleConfig { steps: 250, beta_start: 0.001, beta_end: 0.041 },
            weights: WeightConfig::default(),
            denoiser: DenoiserConfig::desk(),
            fit: FitConfig::default(),
            evaluate: EvaluateSection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

impl RunConfig {
    /// Loads a config file and applies `--set` overrides, verifying the
    /// whole tree against the schema.
    pub fn load(path: &std::path::Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, overrides)
    }

    /// Parses config text and applies overrides; `Default` fills whatever
    /// the file leaves out.
    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self> {
        let parsed: RunConfig = serde_json::from_str(text)
            .map_err(|e| CliError::config(format!("bad config: {e}")))?;
        let cfg = apply_overrides(parsed, overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<Self> {
        self.simulate.day.validate().map_err(|e| CliError::config(format!("simulate.day: {e}")))?;
        if self.windows.window_bins == 0
            || self.windows.step_bins == 0
            || self.windows.batch_windows == 0
        {
            return Err(CliError::config(
                "windows.window_bins, step_bins and batch_windows must all be positive",
            ));
        }
        if self.windows.window_bins > self.simulate.day.t_bins {
            return Err(CliError::config(format!(
                "windows.window_bins {} exceeds the day grid's {} time bins",
                self.windows.window_bins, self.simulate.day.t_bins
            )));
        }
        let (gt, gs) = self.denoiser.grid_bins;
        if gt != self.windows.window_bins || gs != self.simulate.day.s_bins {
            return Err(CliError::config(format!(
                "denoiser.grid_bins ({gt}, {gs}) must match (windows.window_bins, day.s_bins) = ({}, {})",
                self.windows.window_bins, self.simulate.day.s_bins
            )));
        }
        self.denoiser
            .validate()
            .map_err(|e| CliError::config(format!("denoiser: {e}")))?;
        self.schedule.build().map_err(|e| CliError::config(format!("schedule: {e}")))?;
        self.sampling.build().map_err(|e| CliError::config(format!("sampling: {e}")))?;
        if self.evaluate.mape_floor_mph <= 0.0 {
            return Err(CliError::config("evaluate.mape_floor_mph must be positive"));
        }
        if self.analysis.probe_spacing_s <= 0.0 {
            return Err(CliError::config("analysis.probe_spacing_s must be positive"));
        }
        Ok(self.clone())
    }

    /// Grid of one training/eval window: the day grid cut to `window_bins`.
    pub fn window_spec(&self) -> GridSpec {
        GridSpec { t_bins: self.windows.window_bins, ..self.simulate.day }
    }

    /// Hex SHA-256 over the canonical serialized form. Identical effective
    /// configs hash identically regardless of file formatting.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        let digest = h.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    /// Seed for day `index` of the corpus.
    pub fn day_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }
}

/// Applies `key.path=value` overrides on top of a parsed config. The path
/// must already exist in the serialized schema; values parse as JSON first
/// and fall back to a bare string.
fn apply_overrides(cfg: RunConfig, overrides: &[String]) -> Result<RunConfig> {
    if overrides.is_empty() {
        return Ok(cfg);
    }
    let mut tree = serde_json::to_value(&cfg).expect("config serializes");
    for spec in overrides {
        let (path, raw) = spec
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("override `{spec}` is not key.path=value")))?;
        let value = serde_json::from_str::<serde_json::Value>(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        let mut node = &mut tree;
        let segments: Vec<&str> = path.split('.').collect();
        for (i, seg) in segments.iter().enumerate() {
            let map = node.as_object_mut().ok_or_else(|| {
                CliError::config(format!(
                    "override `{path}`: `{}` is not an object",
                    segments[..i].join(".")
                ))
            })?;
            node = map.get_mut(*seg).ok_or_else(|| {
                CliError::config(format!("override `{path}`: unknown key `{seg}`"))
            })?;
            if i + 1 == segments.len() {
                *node = value.clone();
            }
        }
    }
    serde_json::from_value(tree).map_err(|e| CliError::config(format!("bad override value: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let cfg = RunConfig::from_json("{}", &[]).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::from_json(r#"{"turbo": true}"#, &[]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn nested_unknown_key_rejected() {
        let err = RunConfig::from_json(r#"{"simulate": {"regime": "stable", "mood": 3}}"#, &[])
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn override_changes_leaf() {
        let cfg = RunConfig::from_json("{}", &["fit.max_steps=7".into()]).unwrap();
        assert_eq!(cfg.fit.max_steps, 7);
    }

    #[test]
    fn override_unknown_path_rejected() {
        let err = RunConfig::from_json("{}", &["fit.max_step=7".into()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn override_enum_value() {
        let cfg = RunConfig::from_json("{}", &["simulate.regime=stable".into()]).unwrap();
        assert_eq!(cfg.simulate.regime, Regime::Stable);
    }

    #[test]
    fn hash_ignores_formatting_but_not_values() {
        let a = RunConfig::from_json("{ }", &[]).unwrap();
        let b = RunConfig::from_json("{\n}\n", &[]).unwrap();
        let c = RunConfig::from_json("{}", &["seed=9".into()]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn mismatched_grid_bins_rejected() {
        let err = RunConfig::from_json("{}", &["denoiser.grid_bins=[64,64]".into()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
