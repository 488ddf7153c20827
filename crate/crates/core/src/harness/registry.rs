//! Ordered checkpoint registry: labels M_0..M_N plus per-epoch entries.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::{load_checkpoint, Provenance};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub label: String,
    pub path: PathBuf,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRegistry {
    pub entries: Vec<CheckpointEntry>,
}

impl CheckpointRegistry {
    pub fn push(&mut self, entry: CheckpointEntry) {
        assert!(
            !self.entries.iter().any(|e| e.label == entry.label),
            "duplicate checkpoint label {}",
            entry.label
        );
        self.entries.push(entry);
    }

    pub fn get(&self, label: &str) -> Option<&CheckpointEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    /// Labels of the task-final checkpoints M_0, M_1, ... in order.
    pub fn final_labels(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| !e.label.contains(".E"))
            .map(|e| e.label.clone())
            .collect()
    }

    /// Verifies that every referenced checkpoint loads.
    pub fn validate(&self) -> Result<(), HarnessError> {
        for e in &self.entries {
            load_checkpoint(&e.path)
                .map_err(|err| HarnessError::Data(format!("registry entry '{}': {err}", e.label)))?;
        }
        Ok(())
    }

    /// Rewrites stored paths relative to `base` (for portable reports).
    pub fn relative_to(&self, base: &Path) -> CheckpointRegistry {
        CheckpointRegistry {
            entries: self
                .entries
                .iter()
                .map(|e| CheckpointEntry {
                    label: e.label.clone(),
                    path: e.path.strip_prefix(base).unwrap_or(&e.path).to_path_buf(),
                    provenance: e.provenance.clone(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[should_panic(expected = "duplicate checkpoint label")]
    fn labels_must_be_unique() {
        let mut r = CheckpointRegistry::default();
        let e = CheckpointEntry {
            label: "M_0".to_string(),
            path: PathBuf::from("x"),
            provenance: Provenance::default(),
        };
        r.push(e.clone());
        r.push(e);
    }

    #[test]
    fn final_labels_skip_epoch_entries() {
        let mut r = CheckpointRegistry::default();
        for label in ["M_0", "M_1.E1", "M_1.E2", "M_1", "M_2.E1", "M_2"] {
            r.push(CheckpointEntry {
                label: label.to_string(),
                path: PathBuf::from(label),
                provenance: Provenance::default(),
            });
        }
        assert_eq!(r.final_labels(), vec!["M_0", "M_1", "M_2"]);
    }
}
