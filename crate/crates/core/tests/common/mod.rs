//! Helpers shared by integration test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use huh_core::transcript::{
    parse_cue_json, parse_srt, parse_vtt, to_cue_json, to_srt, to_vtt, IngestOptions, Transcript, TranscriptCue,
};
use proptest::prelude::*;

pub fn fixture(name: &str) -> Vec<u8> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Random well-formed transcripts: ordered, non-overlapping cues of short
/// words, including non-ASCII letters and markup characters.
pub fn arb_transcript() -> impl Strategy<Value = Transcript> {
    let word = "[a-zA-ZäöüßéÅ0-9'&<>]{1,8}";
    let text = prop::collection::vec(word, 1..8).prop_map(|w| w.join(" "));
    let cue = (0u64..3000, 1u64..6000, text);
    (prop::collection::vec(cue, 1..40), "[a-z]{2}").prop_map(|(cues, language)| {
        let mut t = 0;
        let cues = cues
            .into_iter()
            .enumerate()
            .map(|(index, (gap, len, text))| {
                let start_ms = t + gap;
                t = start_ms + len;
                TranscriptCue { index, start_ms, end_ms: t, text }
            })
            .collect();
        Transcript {
            video_id: "prop".into(),
            language,
            duration_ms: t,
            cues,
        }
    })
}

/// Export `t` as SRT and WebVTT, parse each back, then take the result
/// through cue JSON; every step must reproduce its input exactly.
pub fn check_round_trip(t: &Transcript) -> Result<(), String> {
    let o = IngestOptions {
        video_id: t.video_id.clone(),
        language: t.language.clone(),
        overlap_tolerance_ms: 0,
    };
    // SRT has no escape for '<' and '>', so replace them there.
    let srt_safe = Transcript {
        cues: t
            .cues
            .iter()
            .map(|c| TranscriptCue {
                text: c.text.replace(['<', '>'], "x"),
                ..c.clone()
            })
            .collect(),
        ..t.clone()
    };
    let from_srt = parse_srt(to_srt(&srt_safe).as_bytes(), &o).map_err(|e| format!("srt: {e}"))?;
    if from_srt != srt_safe {
        return Err("srt round trip changed the transcript".into());
    }
    let from_vtt = parse_vtt(to_vtt(t).as_bytes(), &o).map_err(|e| format!("vtt: {e}"))?;
    if from_vtt != *t {
        return Err("vtt round trip changed the transcript".into());
    }
    for parsed in [from_srt, from_vtt] {
        let again = parse_cue_json(to_cue_json(&parsed).as_bytes(), &o).map_err(|e| format!("cue json: {e}"))?;
        if again != parsed {
            return Err("cue json round trip changed the transcript".into());
        }
    }
    Ok(())
}
