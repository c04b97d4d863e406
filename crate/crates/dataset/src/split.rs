use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::{DatasetError, Result};

/// Which part of the corpus a day belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    /// Sliding-window augmentation applies to training days only; validation
    /// and test days are evaluated on their natural windows.
    pub fn augmentation_allowed(self) -> bool {
        matches!(self, Split::Train)
    }
}

/// Day-level split assignment. Days are identified by opaque strings
/// (typically dates); splitting happens at day granularity precisely so
/// that overlapping augmented windows can never straddle a split boundary.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitManifest {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    /// Free-form provenance notes per day (incidents, closures, sensor
    /// outages) explaining why a day sits where it does.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

impl SplitManifest {
    /// Ensures no day appears twice, within or across splits.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (name, days) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for day in days {
                if !seen.insert(day.as_str()) {
                    return Err(DatasetError::Manifest(format!(
                        "day {day:?} appears more than once (second occurrence in {name})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn split_of(&self, day: &str) -> Option<Split> {
        if self.train.iter().any(|d| d == day) {
            Some(Split::Train)
        } else if self.val.iter().any(|d| d == day) {
            Some(Split::Val)
        } else if self.test.iter().any(|d| d == day) {
            Some(Split::Test)
        } else {
            None
        }
    }

    pub fn days(&self, split: Split) -> &[String] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let manifest: SplitManifest = serde_json::from_str(&text)
            .map_err(|e| DatasetError::Manifest(format!("{}: {e}", path.display())))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| DatasetError::Manifest(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}
