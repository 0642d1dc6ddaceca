//! Pre-generated explanation bundles: slot planning, generation, timestamp
//! lookup and static export.

mod export;
mod generate;
mod plan;

pub use export::{export_static, manifest, manifest_json, slot_file, slot_file_json, Manifest, SlotFile};
pub use generate::{generate_bundle, BundleConfig, GenerationRun, DEFAULT_ABORT_THRESHOLD};
pub use plan::{plan_slots, slot_count, Plan, PlannedSlot, SlotRange, DEFAULT_INTERVAL_MS};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

use crate::provider::{ProviderError, TokenUsage};
use crate::Level;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("invalid slot range: {0}")]
    InvalidRange(String),
    #[error("aborted after {failed} of {total} provider calls failed: {last}")]
    ProviderExhausted {
        failed: usize,
        total: usize,
        last: ProviderError,
    },
    #[error("bundle I/O on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bundle JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bundle violates an invariant: {0}")]
    Corrupt(String),
}

impl BundleError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::IoFailure {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotStatus {
    Generated,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationSlot {
    pub slot_index: usize,
    pub slot_start_ms: u64,
    pub level: Level,
    pub target_sentence_indices: Vec<usize>,
    pub explanation_ref: Option<String>,
    pub status: SlotStatus,
    /// Why an unavailable slot has no explanation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub level: Level,
    pub target_sentence_indices: Vec<usize>,
    pub text: String,
    pub usage: TokenUsage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub model: String,
    pub template_hashes: BTreeMap<String, String>,
    pub created_at: String,
}

/// Key of the explanations table: level and target sentences, e.g. `2:5,6`.
pub fn explanation_key(level: Level, targets: &[usize]) -> String {
    let ids: Vec<String> = targets.iter().map(usize::to_string).collect();
    format!("{level}:{}", ids.join(","))
}

/// Everything one video needs in the serving phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationBundle {
    pub video_id: String,
    pub language: String,
    pub interval_ms: u64,
    pub coverage_start_ms: u64,
    pub coverage_end_ms: u64,
    pub explanations: BTreeMap<String, Explanation>,
    /// All level-1 slots in index order, then all level-2 slots.
    pub slots: Vec<ExplanationSlot>,
    pub generator_meta: GeneratorMeta,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupResult {
    pub available: bool,
    pub explanation_text: String,
    pub level: Level,
    pub slot_start_ms: Option<u64>,
    pub target_sentence_indices: Vec<usize>,
}

impl LookupResult {
    pub fn unavailable(level: Level) -> Self {
        Self {
            available: false,
            explanation_text: String::new(),
            level,
            slot_start_ms: None,
            target_sentence_indices: Vec::new(),
        }
    }
}

impl ExplanationBundle {
    pub fn slot_count_per_level(&self) -> usize {
        self.slots.len() / Level::ALL.len()
    }

    pub fn slots_for(&self, level: Level) -> &[ExplanationSlot] {
        let n = self.slot_count_per_level();
        let offset = match level {
            Level::One => 0,
            Level::Two => n,
        };
        &self.slots[offset..offset + n]
    }

    /// Resolve a slot to its explanation text, if generated.
    pub fn slot_text(&self, slot: &ExplanationSlot) -> Option<&str> {
        if slot.status != SlotStatus::Generated {
            return None;
        }
        let key = slot.explanation_ref.as_ref()?;
        self.explanations.get(key).map(|e| e.text.as_str())
    }

    pub fn slot_result(&self, slot: &ExplanationSlot) -> LookupResult {
        let text = self.slot_text(slot);
        LookupResult {
            available: text.is_some(),
            explanation_text: text.unwrap_or_default().to_string(),
            level: slot.level,
            slot_start_ms: Some(slot.slot_start_ms),
            target_sentence_indices: slot.target_sentence_indices.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), BundleError> {
        let json = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, json).map_err(|e| BundleError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, BundleError> {
        let bytes = std::fs::read(path).map_err(|e| BundleError::io(path, e))?;
        let bundle: Self = serde_json::from_slice(&bytes)?;
        bundle.validate()?;
        Ok(bundle)
    }

    /// Check slot arithmetic and that generated slots resolve to text.
    pub fn validate(&self) -> Result<(), BundleError> {
        let corrupt = |m: String| Err(BundleError::Corrupt(m));
        if self.slots.is_empty() {
            return Ok(());
        }
        let range = SlotRange::new(self.interval_ms, self.coverage_start_ms, self.coverage_end_ms);
        let expected = slot_count(&range).map_err(|e| BundleError::Corrupt(e.to_string()))?;
        if self.slots.len() != expected * Level::ALL.len() {
            return corrupt(format!(
                "{} slots, expected {expected} per level",
                self.slots.len()
            ));
        }
        for level in Level::ALL {
            for (k, slot) in self.slots_for(level).iter().enumerate() {
                if slot.level != level || slot.slot_index != k {
                    return corrupt(format!("slot {k} of level {level} is out of place"));
                }
                if slot.slot_start_ms != self.coverage_start_ms + k as u64 * self.interval_ms {
                    return corrupt(format!("slot {k} of level {level} has start {}", slot.slot_start_ms));
                }
                if slot.status == SlotStatus::Generated
                    && self.slot_text(slot).is_none_or(|t| t.is_empty())
                {
                    return corrupt(format!("slot {k} of level {level} does not resolve to text"));
                }
            }
        }
        Ok(())
    }
}

/// Explanation for a viewer who paused at `t_ms`.
///
/// Picks the slot with the largest start `<= t_ms`. Times outside
/// `[coverage_start_ms, coverage_end_ms]` and unavailable slots report
/// `available = false`. Never calls a provider.
pub fn lookup(bundle: &ExplanationBundle, t_ms: u64, level: Level) -> LookupResult {
    let n = bundle.slot_count_per_level();
    if n == 0
        || bundle.interval_ms == 0
        || t_ms < bundle.coverage_start_ms
        || t_ms > bundle.coverage_end_ms
    {
        return LookupResult::unavailable(level);
    }
    let k = (((t_ms - bundle.coverage_start_ms) / bundle.interval_ms) as usize).min(n - 1);
    bundle.slot_result(&bundle.slots_for(level)[k])
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Hand-built bundle: 4 slots per level over 0..=15000 ms, slot 0 with
    /// no target, slots 1-2 sharing a target.
    pub fn small_bundle() -> ExplanationBundle {
        let mut explanations = BTreeMap::new();
        for (level, targets, text) in [
            (Level::One, vec![0], "one-a"),
            (Level::One, vec![1], "one-b"),
            (Level::Two, vec![0], "two-a"),
            (Level::Two, vec![0, 1], "two-b"),
        ] {
            explanations.insert(
                explanation_key(level, &targets),
                Explanation {
                    level,
                    target_sentence_indices: targets,
                    text: text.into(),
                    usage: TokenUsage::new(10, 48),
                },
            );
        }
        let mut slots = Vec::new();
        for level in Level::ALL {
            let targets: [Vec<usize>; 4] = match level {
                Level::One => [vec![], vec![0], vec![0], vec![1]],
                Level::Two => [vec![], vec![0], vec![0], vec![0, 1]],
            };
            for (k, t) in targets.into_iter().enumerate() {
                let generated = !t.is_empty();
                slots.push(ExplanationSlot {
                    slot_index: k,
                    slot_start_ms: k as u64 * 5000,
                    level,
                    explanation_ref: generated.then(|| explanation_key(level, &t)),
                    target_sentence_indices: t,
                    status: if generated { SlotStatus::Generated } else { SlotStatus::Unavailable },
                    note: None,
                });
            }
        }
        ExplanationBundle {
            video_id: "small".into(),
            language: "en".into(),
            interval_ms: 5000,
            coverage_start_ms: 0,
            coverage_end_ms: 15_000,
            explanations,
            slots,
            generator_meta: GeneratorMeta {
                model: "hand".into(),
                template_hashes: BTreeMap::new(),
                created_at: "1970-01-01T00:00:00Z".into(),
            },
        }
    }
}
