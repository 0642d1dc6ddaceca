//! Bundled sample data: an unpunctuated lecture transcript, ledgers with
//! the reference token totals, and a one-call demo of the whole pipeline.

use std::path::{Path, PathBuf};

use crate::bundle::{export_static, generate_bundle, BundleConfig, BundleError, ExplanationBundle};
use crate::emissions::{EmissionsError, EmissionsReport, RunLedger, REFERENCE_RUNS};
use crate::provider::MockProvider;
use crate::segment::{restore_punctuation_rule, DEFAULT_GAP_MS};
use crate::transcript::{parse, to_cue_json, IngestOptions, Transcript, TranscriptFormat};

/// Short lecture on character-level language models, lowercase and
/// without punctuation, as automatic captioning produces it.
pub const LECTURE_SRT: &str = include_str!("../fixtures/lecture.srt");
pub const LECTURE_VIDEO_ID: &str = "demo-lecture";

/// Fixed creation time so demo bundles are byte-for-byte reproducible.
pub const DEMO_CREATED_AT: &str = "2024-01-01T00:00:00Z";

pub fn lecture_transcript() -> Transcript {
    let opts = IngestOptions {
        video_id: LECTURE_VIDEO_ID.into(),
        ..IngestOptions::default()
    };
    parse(LECTURE_SRT.as_bytes(), TranscriptFormat::Srt, &opts).expect("bundled fixture parses")
}

/// Lecture with rule-based punctuation applied.
pub fn punctuated_lecture() -> Transcript {
    restore_punctuation_rule(&lecture_transcript(), DEFAULT_GAP_MS)
}

/// Single-entry ledgers carrying the reference runs' token totals, for
/// checking the emissions conversion end to end.
pub fn reference_ledgers() -> [RunLedger; 2] {
    let names = ["reference-en", "reference-de"];
    std::array::from_fn(|i| {
        let mut ledger = RunLedger::new(names[i]);
        ledger.record(format!("{}/total", names[i]), REFERENCE_RUNS[i].0);
        ledger
    })
}

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Emissions(#[from] EmissionsError),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Paths written by [`write_demo`].
#[derive(Debug, Clone)]
pub struct DemoOutputs {
    pub transcript_srt: PathBuf,
    pub cue_json: PathBuf,
    pub bundle: PathBuf,
    pub emissions: PathBuf,
    pub static_dir: PathBuf,
    pub bundle_value: ExplanationBundle,
}

/// Run the lecture through punctuation, mock generation and export,
/// writing everything under `dir`.
pub async fn write_demo(dir: &Path, factor_kg_per_token: f64) -> Result<DemoOutputs, DemoError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| DemoError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let transcript = punctuated_lecture();

    let transcript_srt = dir.join("lecture.srt");
    std::fs::write(&transcript_srt, LECTURE_SRT).map_err(io(&transcript_srt))?;
    let cue_json = dir.join("transcript.json");
    std::fs::write(&cue_json, to_cue_json(&transcript) + "\n").map_err(io(&cue_json))?;

    let cfg = BundleConfig {
        created_at: Some(DEMO_CREATED_AT.into()),
        ..BundleConfig::default()
    };
    let run = generate_bundle(&transcript, &MockProvider::new(), &cfg).await?;
    let bundle = dir.join("bundle.json");
    run.bundle.save(&bundle)?;
    let emissions = dir.join("emissions.json");
    EmissionsReport::new(run.ledger, factor_kg_per_token)?
        .with_no_dedup_totals(run.no_dedup_totals)
        .write(&emissions)?;
    let static_dir = dir.join("static");
    export_static(&run.bundle, &static_dir)?;

    Ok(DemoOutputs {
        transcript_srt,
        cue_json,
        bundle,
        emissions,
        static_dir,
        bundle_value: run.bundle,
    })
}
