use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{BundleError, ExplanationBundle, GeneratorMeta};
use crate::Level;

/// `manifest.json` of a static export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub video_id: String,
    pub language: String,
    pub interval_ms: u64,
    pub coverage_start_ms: u64,
    pub coverage_end_ms: u64,
    pub levels: Vec<Level>,
    pub slot_count_per_level: usize,
    pub generator_meta: GeneratorMeta,
}

/// `{level}/{slot_index}.json` of a static export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotFile {
    pub slot_start_ms: u64,
    pub available: bool,
    pub explanation: String,
    pub target_sentence_indices: Vec<usize>,
}

pub fn manifest(bundle: &ExplanationBundle) -> Manifest {
    Manifest {
        video_id: bundle.video_id.clone(),
        language: bundle.language.clone(),
        interval_ms: bundle.interval_ms,
        coverage_start_ms: bundle.coverage_start_ms,
        coverage_end_ms: bundle.coverage_end_ms,
        levels: Level::ALL.to_vec(),
        slot_count_per_level: bundle.slot_count_per_level(),
        generator_meta: bundle.generator_meta.clone(),
    }
}

pub fn slot_file(bundle: &ExplanationBundle, level: Level, index: usize) -> Option<SlotFile> {
    let slot = bundle.slots_for(level).get(index)?;
    let result = bundle.slot_result(slot);
    Some(SlotFile {
        slot_start_ms: slot.slot_start_ms,
        available: result.available,
        explanation: result.explanation_text,
        target_sentence_indices: result.target_sentence_indices,
    })
}

/// Exact bytes of a slot file, shared by the exporter and the HTTP server.
pub fn slot_file_json(bundle: &ExplanationBundle, level: Level, index: usize) -> Option<String> {
    slot_file(bundle, level, index).map(|f| serde_json::to_string(&f).expect("slot file serializes"))
}

pub fn manifest_json(bundle: &ExplanationBundle) -> String {
    serde_json::to_string(&manifest(bundle)).expect("manifest serializes")
}

/// Write `manifest.json` and one JSON file per slot and level under
/// `out_dir`. Output depends only on the bundle, so re-exporting rewrites
/// identical bytes.
pub fn export_static(bundle: &ExplanationBundle, out_dir: &Path) -> Result<Manifest, BundleError> {
    std::fs::create_dir_all(out_dir).map_err(|e| BundleError::io(out_dir, e))?;
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(&manifest_path, manifest_json(bundle)).map_err(|e| BundleError::io(&manifest_path, e))?;
    let n = bundle.slot_count_per_level();
    if n > 0 {
        for level in Level::ALL {
            let dir = out_dir.join(level.to_string());
            std::fs::create_dir_all(&dir).map_err(|e| BundleError::io(&dir, e))?;
            for k in 0..n {
                let path = dir.join(format!("{k}.json"));
                let json = slot_file_json(bundle, level, k).expect("index within slot count");
                std::fs::write(&path, json).map_err(|e| BundleError::io(&path, e))?;
            }
        }
    }
    Ok(manifest(bundle))
}
