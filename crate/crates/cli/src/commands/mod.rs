//! One module per subcommand, plus the context and small helpers they share.

pub mod baseline;
pub mod evaluate;
pub mod preprocess;
pub mod reconstruct;
pub mod simulate;
pub mod stats;
pub mod traveltime;
pub mod waves;

pub mod train;

use std::path::Path;

use serde::Serialize;
use wavex_core::FieldMeta;

use crate::config::RunConfig;
use crate::data::DataRoot;
use crate::{CliError, Result};

/// Everything a subcommand needs: the effective config and the dataset root.
pub struct Ctx {
    pub cfg: RunConfig,
    pub root: DataRoot,
}

impl Ctx {
    /// Day names in corpus order: train days first, then val, then test.
    pub fn day_names(&self) -> Vec<String> {
        (0..self.cfg.simulate.total_days()).map(crate::data::day_name).collect()
    }

    /// The split ("train" / "val" / "test") of corpus day `index`.
    pub fn split_of_index(&self, index: usize) -> &'static str {
        let sim = &self.cfg.simulate;
        if index < sim.train_days {
            "train"
        } else if index < sim.train_days + sim.val_days {
            "val"
        } else {
            "test"
        }
    }
}

pub fn field_meta(lane: u32, source: &str, notes: String) -> FieldMeta {
    FieldMeta { lane, source: source.to_string(), notes }
}

/// Serializes a report to pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::data(format!("serialize {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
