//! Transcript ingestion: SubRip, WebVTT and CueFile JSON parsers that all
//! produce the same normalized [`Transcript`].

mod cuefile;
mod srt;
mod text;
mod vtt;

pub use cuefile::{parse_cue_json, to_cue_json, CueFile, CueFileEntry};
pub use srt::{parse_srt, to_srt};
pub use text::{normalize_text, strip_tags};
pub use vtt::{parse_vtt, to_vtt};

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("malformed timestamp {value:?} on line {line}")]
    MalformedTimestamp { line: usize, value: String },
    #[error("cue {index} is out of order: {detail}")]
    NonMonotonicCues { index: usize, detail: String },
    #[error("file contains no cues")]
    EmptyFile,
    #[error("missing WEBVTT header")]
    MissingHeader,
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
    #[error("cue file schema violation: {0}")]
    SchemaViolation(String),
    #[error("unsupported transcript format {0:?}")]
    UnknownFormat(String),
}

/// One timed caption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptCue {
    pub index: usize,
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub video_id: String,
    pub language: String,
    pub duration_ms: u64,
    pub cues: Vec<TranscriptCue>,
}

/// Settings shared by all parsers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestOptions {
    pub video_id: String,
    pub language: String,
    /// Overlap between consecutive cues that is accepted as-is. Larger
    /// overlaps are clipped at the midpoint of the overlapping region.
    pub overlap_tolerance_ms: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            video_id: "video".to_string(),
            language: "en".to_string(),
            overlap_tolerance_ms: 0,
        }
    }
}

/// Source format of a transcript file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranscriptFormat {
    Srt,
    Vtt,
    CueJson,
}

impl TranscriptFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "srt" => Some(Self::Srt),
            "vtt" => Some(Self::Vtt),
            "json" => Some(Self::CueJson),
            _ => None,
        }
    }
}

impl std::str::FromStr for TranscriptFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "srt" => Ok(Self::Srt),
            "vtt" | "webvtt" => Ok(Self::Vtt),
            "json" | "cue-json" | "cuefile" => Ok(Self::CueJson),
            other => Err(IngestError::UnknownFormat(other.to_string())),
        }
    }
}

/// Parse `bytes` in the given format.
pub fn parse(
    bytes: &[u8],
    format: TranscriptFormat,
    opts: &IngestOptions,
) -> Result<Transcript, IngestError> {
    match format {
        TranscriptFormat::Srt => parse_srt(bytes, opts),
        TranscriptFormat::Vtt => parse_vtt(bytes, opts),
        TranscriptFormat::CueJson => parse_cue_json(bytes, opts),
    }
}

/// A cue as read from a file, before validation.
#[derive(Debug, Clone)]
pub(crate) struct RawCue {
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
}

pub(crate) fn decode_utf8(bytes: &[u8]) -> Result<&str, IngestError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    std::str::from_utf8(bytes).map_err(|_| IngestError::InvalidUtf8)
}

impl Transcript {
    /// Validate raw cues, repair overlaps and build a normalized transcript.
    pub(crate) fn from_raw(
        video_id: String,
        language: String,
        duration_ms: Option<u64>,
        raw: Vec<RawCue>,
        overlap_tolerance_ms: u64,
    ) -> Result<Self, IngestError> {
        let mut cues: Vec<RawCue> = Vec::with_capacity(raw.len());
        for (i, cue) in raw.into_iter().enumerate() {
            if cue.start_ms >= cue.end_ms {
                return Err(IngestError::NonMonotonicCues {
                    index: i,
                    detail: format!("start {} is not before end {}", cue.start_ms, cue.end_ms),
                });
            }
            let text = normalize_text(&cue.text);
            if text.is_empty() {
                continue;
            }
            cues.push(RawCue { text, ..cue });
        }
        if cues.is_empty() {
            return Err(IngestError::EmptyFile);
        }
        repair_overlaps(&mut cues, overlap_tolerance_ms)?;

        let last_end = cues.iter().map(|c| c.end_ms).max().unwrap_or(0);
        let duration_ms = match duration_ms {
            Some(d) if d < last_end => {
                return Err(IngestError::SchemaViolation(format!(
                    "duration_ms {d} is shorter than the last cue end {last_end}"
                )))
            }
            Some(d) => d,
            None => last_end,
        };
        let cues = cues
            .into_iter()
            .enumerate()
            .map(|(index, c)| TranscriptCue {
                index,
                start_ms: c.start_ms,
                end_ms: c.end_ms,
                text: c.text,
            })
            .collect();
        Ok(Self {
            video_id,
            language,
            duration_ms,
            cues,
        })
    }

    /// Cue texts joined with single spaces.
    pub fn joined_text(&self) -> String {
        let mut out = String::new();
        for (i, cue) in self.cues.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&cue.text);
        }
        out
    }

    /// Check every structural invariant. Parsers only return transcripts
    /// for which this holds.
    pub fn validate(&self, overlap_tolerance_ms: u64) -> Result<(), IngestError> {
        for (i, cue) in self.cues.iter().enumerate() {
            if cue.index != i {
                return Err(IngestError::NonMonotonicCues {
                    index: i,
                    detail: format!("index {} at position {i}", cue.index),
                });
            }
            if cue.start_ms >= cue.end_ms {
                return Err(IngestError::NonMonotonicCues {
                    index: i,
                    detail: "empty or inverted time span".into(),
                });
            }
            if cue.text.trim().is_empty() {
                return Err(IngestError::SchemaViolation(format!("cue {i} has empty text")));
            }
            if i > 0 {
                let prev = &self.cues[i - 1];
                if cue.start_ms < prev.start_ms || prev.end_ms > cue.start_ms + overlap_tolerance_ms {
                    return Err(IngestError::NonMonotonicCues {
                        index: i,
                        detail: format!(
                            "[{}, {}) after [{}, {})",
                            cue.start_ms, cue.end_ms, prev.start_ms, prev.end_ms
                        ),
                    });
                }
            }
        }
        if let Some(last) = self.cues.iter().map(|c| c.end_ms).max() {
            if self.duration_ms < last {
                return Err(IngestError::SchemaViolation("duration shorter than cues".into()));
            }
        }
        Ok(())
    }
}

/// Clip overlapping neighbours at the midpoint of their shared interval.
fn repair_overlaps(cues: &mut [RawCue], tolerance_ms: u64) -> Result<(), IngestError> {
    for i in 1..cues.len() {
        let (head, tail) = cues.split_at_mut(i);
        let prev = &mut head[i - 1];
        let cur = &mut tail[0];
        if cur.start_ms < prev.start_ms {
            return Err(IngestError::NonMonotonicCues {
                index: i,
                detail: format!("starts at {} before previous cue at {}", cur.start_ms, prev.start_ms),
            });
        }
        if prev.end_ms <= cur.start_ms + tolerance_ms {
            continue;
        }
        let lo = cur.start_ms;
        let hi = prev.end_ms.min(cur.end_ms);
        let floor_mid = lo + (hi - lo) / 2;
        let ceil_mid = lo + (hi - lo).div_ceil(2);
        let boundary = [floor_mid, ceil_mid]
            .into_iter()
            .find(|&b| b > prev.start_ms && b < cur.end_ms)
            .ok_or_else(|| IngestError::NonMonotonicCues {
                index: i,
                detail: "overlap cannot be repaired without emptying a cue".into(),
            })?;
        prev.end_ms = boundary;
        cur.start_ms = boundary;
    }
    // A clipped start can overtake the following cue when cues nest deeply.
    if let Some(i) = (1..cues.len()).find(|&i| cues[i].start_ms < cues[i - 1].start_ms) {
        return Err(IngestError::NonMonotonicCues {
            index: i,
            detail: "overlap repair reordered cues".into(),
        });
    }
    Ok(())
}

/// Return a copy with whitespace collapsed, invisible characters removed and
/// empty cues dropped. Indices are reassigned.
pub fn normalize(transcript: &Transcript) -> Transcript {
    let cues = transcript
        .cues
        .iter()
        .filter_map(|c| {
            let text = normalize_text(&c.text);
            (!text.is_empty()).then(|| TranscriptCue {
                text,
                ..c.clone()
            })
        })
        .enumerate()
        .map(|(index, c)| TranscriptCue { index, ..c })
        .collect();
    Transcript {
        cues,
        ..transcript.clone()
    }
}

/// Format milliseconds as `HH:MM:SS.mmm`.
pub fn format_timestamp(ms: u64, millis_sep: char) -> String {
    let h = ms / 3_600_000;
    let m = (ms / 60_000) % 60;
    let s = (ms / 1000) % 60;
    let f = ms % 1000;
    format!("{h:02}:{m:02}:{s:02}{millis_sep}{f:03}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(s: u64, e: u64, t: &str) -> RawCue {
        RawCue {
            start_ms: s,
            end_ms: e,
            text: t.into(),
        }
    }

    fn build(raws: Vec<RawCue>, tol: u64) -> Result<Transcript, IngestError> {
        Transcript::from_raw("v".into(), "en".into(), None, raws, tol)
    }

    #[test]
    fn overlap_clipped_at_midpoint() {
        let t = build(vec![raw(0, 3000, "a"), raw(2000, 5000, "b")], 0).unwrap();
        assert_eq!((t.cues[0].start_ms, t.cues[0].end_ms), (0, 2500));
        assert_eq!((t.cues[1].start_ms, t.cues[1].end_ms), (2500, 5000));
        t.validate(0).unwrap();
    }

    #[test]
    fn overlap_within_tolerance_kept() {
        let t = build(vec![raw(0, 3000, "a"), raw(2900, 5000, "b")], 100).unwrap();
        assert_eq!(t.cues[0].end_ms, 3000);
        assert_eq!(t.cues[1].start_ms, 2900);
        assert!(t.validate(0).is_err());
        t.validate(100).unwrap();
    }

    #[test]
    fn nested_cue_clipped_inside_overlap_region() {
        let t = build(vec![raw(0, 10_000, "a"), raw(2000, 3000, "b")], 0).unwrap();
        assert_eq!(t.cues[0].end_ms, 2500);
        assert_eq!(t.cues[1].start_ms, 2500);
        assert_eq!(t.cues[1].end_ms, 3000);
        assert_eq!(t.duration_ms, 3000);
    }

    #[test]
    fn touching_cues_are_fine() {
        let t = build(vec![raw(0, 1000, "a"), raw(1000, 2000, "b")], 0).unwrap();
        assert_eq!(t.cues[1].start_ms, 1000);
    }

    #[test]
    fn decreasing_start_rejected() {
        let err = build(vec![raw(5000, 6000, "a"), raw(4000, 4500, "b")], 0).unwrap_err();
        assert!(matches!(err, IngestError::NonMonotonicCues { index: 1, .. }));
    }

    #[test]
    fn unrepairable_overlap_rejected() {
        let err = build(vec![raw(0, 10, "a"), raw(0, 1, "b")], 0).unwrap_err();
        assert!(matches!(err, IngestError::NonMonotonicCues { .. }));
    }

    #[test]
    fn normalize_collapses_and_drops() {
        let t = Transcript {
            video_id: "v".into(),
            language: "en".into(),
            duration_ms: 3000,
            cues: vec![
                TranscriptCue { index: 0, start_ms: 0, end_ms: 1000, text: "a\u{200b}  b".into() },
                TranscriptCue { index: 1, start_ms: 1000, end_ms: 2000, text: "  ".into() },
                TranscriptCue { index: 2, start_ms: 2000, end_ms: 3000, text: "c".into() },
            ],
        };
        let n = normalize(&t);
        assert_eq!(n.cues.len(), 2);
        assert_eq!(n.cues[0].text, "a b");
        assert_eq!(n.cues[1].index, 1);
        assert_eq!(n.cues[1].text, "c");
        assert_eq!(normalize(&n), n);
    }

    #[test]
    fn normalize_keeps_umlauts() {
        let t = Transcript {
            video_id: "v".into(),
            language: "de".into(),
            duration_ms: 1000,
            cues: vec![TranscriptCue {
                index: 0,
                start_ms: 0,
                end_ms: 1000,
                text: "Die  Größe\tder Übung ist  schön.".into(),
            }],
        };
        assert_eq!(normalize(&t).cues[0].text, "Die Größe der Übung ist schön.");
    }

    #[test]
    fn timestamps_format() {
        assert_eq!(format_timestamp(3_723_004, ','), "01:02:03,004");
        assert_eq!(format_timestamp(0, '.'), "00:00:00.000");
    }
}
