//! Dataset root resolution and the on-disk layout every subcommand shares.
//!
//! ```text
//! <root>/
//!   manifest.json            written by `simulate`
//!   splits.json              day names per split
//!   days/<day>/truth.wvx1    dense ground-truth day field
//!   days/<day>/trajectories.csv   (only with simulate.keep_trajectories)
//!   rds/<day>.csv            coarse roadside observations
//!   pre/                     written by `preprocess`
//!     manifest.json  stats.json  index.json
//!     <day>/w0000_cond.wvx1  <day>/w0000_truth.wvx1
//! ```
//!
//! Checkpoints, reconstructions, baselines, and reports go wherever the
//! respective command's `--out` points; by convention under the same root.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavex_core::{CoarseSeries, GridSpec, SpeedField};

use crate::{CliError, Result};

pub const DATA_ROOT_ENV: &str = "WAVEX_DATA_ROOT";

/// Resolves the dataset root: `--data-root` wins, then the environment.
pub fn resolve_root(flag: Option<&Path>) -> Result<PathBuf> {
    if let Some(p) = flag {
        return Ok(p.to_path_buf());
    }
    match std::env::var_os(DATA_ROOT_ENV) {
        Some(v) if !v.is_empty() => Ok(PathBuf::from(v)),
        _ => Err(CliError::config(format!(
            "no dataset root: pass --data-root or set {DATA_ROOT_ENV}"
        ))),
    }
}

/// Path helpers over a resolved dataset root.
#[derive(Debug, Clone)]
pub struct DataRoot {
    root: PathBuf,
}

impl DataRoot {
    pub fn new(root: PathBuf) -> Self {
        DataRoot { root }
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn join(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// A path as stored in manifests: relative to the root when possible.
    pub fn rel(&self, path: &Path) -> String {
        path.strip_prefix(&self.root).unwrap_or(path).to_string_lossy().into_owned()
    }

    pub fn splits(&self) -> PathBuf {
        self.root.join("splits.json")
    }

    pub fn day_dir(&self, day: &str) -> PathBuf {
        self.root.join("days").join(day)
    }

    pub fn truth(&self, day: &str) -> PathBuf {
        self.day_dir(day).join("truth.wvx1")
    }

    pub fn trajectories(&self, day: &str) -> PathBuf {
        self.day_dir(day).join("trajectories.csv")
    }

    pub fn rds(&self, day: &str) -> PathBuf {
        self.root.join("rds").join(format!("{day}.csv"))
    }

    pub fn pre_dir(&self) -> PathBuf {
        self.root.join("pre")
    }

    pub fn stats(&self) -> PathBuf {
        self.pre_dir().join("stats.json")
    }

    pub fn index(&self) -> PathBuf {
        self.pre_dir().join("index.json")
    }

    pub fn pre_cond(&self, day: &str, window: usize) -> PathBuf {
        self.pre_dir().join(day).join(format!("w{window:04}_cond.wvx1"))
    }

    pub fn pre_truth(&self, day: &str, window: usize) -> PathBuf {
        self.pre_dir().join(day).join(format!("w{window:04}_truth.wvx1"))
    }
}

/// Errors out listing every missing input at once, so one failed run tells
/// the whole story.
pub fn require_files(paths: &[PathBuf]) -> Result<()> {
    let missing: Vec<String> = paths
        .iter()
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::data(format!("missing inputs: {}", missing.join(", "))))
    }
}

pub fn day_name(index: usize) -> String {
    format!("d{index:03}")
}

/// Start bins of the sliding windows over a day with `t_bins` time bins.
pub fn window_starts(t_bins: usize, window: usize, step: usize) -> Vec<usize> {
    if window > t_bins || window == 0 || step == 0 {
        return Vec::new();
    }
    (0..=(t_bins - window)).step_by(step).collect()
}

/// One extracted window in `pre/index.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowRef {
    pub day: String,
    /// "train", "val", or "test".
    pub split: String,
    /// Index within the day, matching the `w%04d` file names.
    pub index: usize,
    pub start_bin: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowIndex {
    pub windows: Vec<WindowRef>,
}

impl WindowIndex {
    pub fn for_split<'a>(&'a self, split: &str) -> Vec<&'a WindowRef> {
        self.windows.iter().filter(|w| w.split == split).collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::data(format!("bad window index {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::data(format!("serialize window index: {e}")))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Loads the roadside series for one lane out of a coarse CSV.
pub fn load_coarse_for_lane(path: &Path, lane: u32) -> Result<CoarseSeries> {
    let (series, report) = wavex_dataset::ingest_rds(path)?;
    if !report.rejected.is_empty() {
        log::warn!("{}: {} rows rejected during ingest", path.display(), report.rejected.len());
    }
    series
        .into_iter()
        .find(|s| s.lane() == lane)
        .ok_or_else(|| CliError::data(format!("{} has no data for lane {lane}", path.display())))
}

/// Scatters coarse observations onto a sparse field: each observed speed
/// lands in the cell containing its interval midpoint and sensor position;
/// cells hit more than once average. Input to the interpolation baselines.
pub fn coarse_to_sparse_field(series: &CoarseSeries, spec: &GridSpec) -> Result<SpeedField> {
    let mut sums = vec![0.0f64; spec.t_bins * spec.s_bins];
    let mut counts = vec![0usize; spec.t_bins * spec.s_bins];
    for k in 0..series.n_intervals() {
        let t_mid = series.timestamp(k) + series.interval_s() / 2.0;
        let rel_t = (t_mid - spec.t0_s) / spec.dt_s;
        if rel_t < 0.0 || rel_t >= spec.t_bins as f64 {
            continue;
        }
        let i = rel_t as usize;
        for (s, &x) in series.sensors_mi().iter().enumerate() {
            let Some(obs) = series.obs(k, s) else { continue };
            let Some(speed) = obs.speed_mph else { continue };
            let rel_x = (x - spec.x0_mi) / spec.dx_mi;
            if rel_x < 0.0 || rel_x >= spec.s_bins as f64 {
                continue;
            }
            let j = rel_x as usize;
            sums[i * spec.s_bins + j] += speed;
            counts[i * spec.s_bins + j] += 1;
        }
    }
    let mut field = SpeedField::masked(spec.clone())?;
    for i in 0..spec.t_bins {
        for j in 0..spec.s_bins {
            let n = counts[i * spec.s_bins + j];
            if n > 0 {
                field.set(i, j, Some(sums[i * spec.s_bins + j] / n as f64))?;
            }
        }
    }
    Ok(field)
}

/// Finds the `w*.wvx1` window files in a directory, sorted by name.
pub fn list_window_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::data(format!("cannot list {}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with('w') && name.ends_with(".wvx1") {
            out.push(path);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(CliError::data(format!("{} holds no w*.wvx1 windows", dir.display())));
    }
    Ok(out)
}

/// Deterministic per-window sampler seed: the run seed mixed with the day
/// name and window index, so outputs never depend on processing order.
pub fn window_seed(run_seed: u64, day: &str, window: usize) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in day.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h ^= window as u64;
    h = h.wrapping_mul(0x1000_0000_01b3);
    run_seed ^ h
}
