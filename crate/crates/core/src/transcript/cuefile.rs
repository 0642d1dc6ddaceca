use serde::{Deserialize, Serialize};

use super::{decode_utf8, IngestError, IngestOptions, RawCue, Transcript};

/// On-disk interchange form of a transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueFile {
    pub video_id: String,
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<i64>,
    pub cues: Vec<CueFileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueFileEntry {
    pub start_ms: i64,
    pub end_ms: i64,
    pub text: String,
}

impl From<&Transcript> for CueFile {
    fn from(t: &Transcript) -> Self {
        Self {
            video_id: t.video_id.clone(),
            language: t.language.clone(),
            duration_ms: Some(t.duration_ms as i64),
            cues: t
                .cues
                .iter()
                .map(|c| CueFileEntry {
                    start_ms: c.start_ms as i64,
                    end_ms: c.end_ms as i64,
                    text: c.text.clone(),
                })
                .collect(),
        }
    }
}

/// Serialize a transcript as pretty-printed CueFile JSON.
pub fn to_cue_json(t: &Transcript) -> String {
    serde_json::to_string_pretty(&CueFile::from(t)).expect("CueFile always serializes")
}

/// Parse a CueFile JSON document.
pub fn parse_cue_json(bytes: &[u8], opts: &IngestOptions) -> Result<Transcript, IngestError> {
    let text = decode_utf8(bytes)?;
    let file: CueFile =
        serde_json::from_str(text).map_err(|e| IngestError::SchemaViolation(e.to_string()))?;

    let non_negative = |v: i64, what: &str| -> Result<u64, IngestError> {
        u64::try_from(v).map_err(|_| IngestError::SchemaViolation(format!("{what} is negative: {v}")))
    };
    let duration_ms = file
        .duration_ms
        .map(|d| non_negative(d, "duration_ms"))
        .transpose()?;
    let mut raw = Vec::with_capacity(file.cues.len());
    for (i, cue) in file.cues.into_iter().enumerate() {
        let start_ms = non_negative(cue.start_ms, &format!("cues[{i}].start_ms"))?;
        let end_ms = non_negative(cue.end_ms, &format!("cues[{i}].end_ms"))?;
        if end_ms <= start_ms {
            return Err(IngestError::SchemaViolation(format!(
                "cues[{i}]: end_ms {end_ms} must be greater than start_ms {start_ms}"
            )));
        }
        raw.push(RawCue {
            start_ms,
            end_ms,
            text: cue.text,
        });
    }
    Transcript::from_raw(
        file.video_id,
        file.language,
        duration_ms,
        raw,
        opts.overlap_tolerance_ms,
    )
    .map_err(|e| match e {
        IngestError::SchemaViolation(_) => e,
        other => IngestError::SchemaViolation(other.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Transcript, IngestError> {
        parse_cue_json(s.as_bytes(), &IngestOptions::default())
    }

    #[test]
    fn minimal_document() {
        let t = parse(r#"{"video_id":"v1","language":"en","cues":[{"start_ms":0,"end_ms":1000,"text":"A."}]}"#)
            .unwrap();
        assert_eq!(t.video_id, "v1");
        assert_eq!(t.cues.len(), 1);
        assert_eq!(t.duration_ms, 1000);
    }

    #[test]
    fn schema_violations() {
        let cases = [
            r#"{"video_id":"v1","language":"en","cues":[{"start_ms":5,"end_ms":5,"text":"A."}]}"#,
            r#"{"video_id":"v1","language":"en","cues":[{"start_ms":-1,"end_ms":5,"text":"A."}]}"#,
            r#"{"video_id":"v1","cues":[{"start_ms":0,"end_ms":5,"text":"A."}]}"#,
            r#"{"video_id":"v1","language":"en","cues":[{"start_ms":"0","end_ms":5,"text":"A."}]}"#,
            r#"{"video_id":"v1","language":"en","cues":[]}"#,
            r#"{"video_id":"v1","language":"en","duration_ms":3,"cues":[{"start_ms":0,"end_ms":5,"text":"A."}]}"#,
            r#"[1, 2]"#,
        ];
        for case in cases {
            assert!(
                matches!(parse(case), Err(IngestError::SchemaViolation(_))),
                "accepted {case}"
            );
        }
    }

    #[test]
    fn explicit_duration_kept() {
        let t = parse(r#"{"video_id":"v","language":"de","duration_ms":9000,"cues":[{"start_ms":0,"end_ms":1000,"text":"A."}]}"#)
            .unwrap();
        assert_eq!(t.duration_ms, 9000);
        assert_eq!(parse(&to_cue_json(&t)).unwrap(), t);
    }
}
