use super::{decode_utf8, format_timestamp, strip_tags, IngestError, IngestOptions, RawCue, Transcript};

/// Parse a SubRip file.
///
/// Numeric counters are ignored, multi-line cue bodies are joined with one
/// space and markup is stripped. `HH:MM:SS,mmm` is the canonical timestamp;
/// a `.` millisecond separator is accepted as well since many exporters
/// emit it.
pub fn parse_srt(bytes: &[u8], opts: &IngestOptions) -> Result<Transcript, IngestError> {
    let text = decode_utf8(bytes)?;
    if text.trim().is_empty() {
        return Err(IngestError::EmptyFile);
    }
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();

    let mut raw = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].trim();
        if !line.contains("-->") {
            i += 1;
            continue;
        }
        let (start_ms, end_ms) = parse_timing(line, i + 1)?;
        i += 1;
        let mut body = Vec::new();
        while i < lines.len() && !lines[i].trim().is_empty() {
            // A counter directly followed by a timing line starts the next cue
            // even when the blank separator line is missing.
            if is_counter(lines[i]) && lines.get(i + 1).is_some_and(|l| l.contains("-->")) {
                break;
            }
            body.push(lines[i].trim());
            i += 1;
        }
        raw.push(RawCue {
            start_ms,
            end_ms,
            text: strip_tags(&body.join(" ")),
        });
    }
    if raw.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    Transcript::from_raw(
        opts.video_id.clone(),
        opts.language.clone(),
        None,
        raw,
        opts.overlap_tolerance_ms,
    )
}

fn is_counter(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())
}

fn parse_timing(line: &str, line_no: usize) -> Result<(u64, u64), IngestError> {
    let (left, right) = line.split_once("-->").expect("caller checked for arrow");
    let start = left.trim();
    let end = right.split_whitespace().next().unwrap_or("");
    let bad = |v: &str| IngestError::MalformedTimestamp {
        line: line_no,
        value: v.to_string(),
    };
    let start_ms = parse_timestamp(start, &[',', '.'], false).ok_or_else(|| bad(start))?;
    let end_ms = parse_timestamp(end, &[',', '.'], false).ok_or_else(|| bad(end))?;
    Ok((start_ms, end_ms))
}

/// Parse `[HH:]MM:SS<sep>mmm` into milliseconds. Hours are mandatory unless
/// `hours_optional` is set.
pub(crate) fn parse_timestamp(s: &str, seps: &[char], hours_optional: bool) -> Option<u64> {
    let (clock, millis) = s.rsplit_once(|c| seps.contains(&c))?;
    if millis.is_empty() || millis.len() > 3 || !millis.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let millis: u64 = format!("{millis:0<3}").parse().ok()?;

    let parts: Vec<&str> = clock.split(':').collect();
    let (h, m, sec) = match parts.as_slice() {
        [h, m, s] => (*h, *m, *s),
        [m, s] if hours_optional => ("0", *m, *s),
        _ => return None,
    };
    let num = |p: &str, max_len: usize| -> Option<u64> {
        if p.is_empty() || p.len() > max_len || !p.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        p.parse().ok()
    };
    let h = num(h, 4)?;
    let m = num(m, 2)?;
    let sec = num(sec, 2)?;
    if m >= 60 || sec >= 60 {
        return None;
    }
    Some(((h * 60 + m) * 60 + sec) * 1000 + millis)
}

/// Write a transcript as SubRip with 1-based counters.
pub fn to_srt(t: &Transcript) -> String {
    let mut out = String::new();
    for (n, cue) in t.cues.iter().enumerate() {
        out.push_str(&format!(
            "{}\n{} --> {}\n{}\n\n",
            n + 1,
            format_timestamp(cue.start_ms, ','),
            format_timestamp(cue.end_ms, ','),
            cue.text
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcript::TranscriptCue;

    fn opts() -> IngestOptions {
        IngestOptions::default()
    }

    #[test]
    fn minimal_file() {
        let t = parse_srt(b"1\n00:00:00,000 --> 00:00:02,500\nHello world.\n", &opts()).unwrap();
        assert_eq!(
            t.cues,
            vec![TranscriptCue {
                index: 0,
                start_ms: 0,
                end_ms: 2500,
                text: "Hello world.".into()
            }]
        );
        assert_eq!(t.duration_ms, 2500);
    }

    #[test]
    fn inverted_times_rejected() {
        let src = b"1\n00:00:05,000 --> 00:00:04,000\nA.\n\n2\n00:00:06,000 --> 00:00:07,000\nB.\n";
        assert!(matches!(
            parse_srt(src, &opts()),
            Err(IngestError::NonMonotonicCues { index: 0, .. })
        ));
    }

    #[test]
    fn backwards_cues_rejected() {
        let src = b"1\n00:00:05,000 --> 00:00:06,000\nA.\n\n2\n00:00:04,000 --> 00:00:04,500\nB.\n";
        assert!(matches!(
            parse_srt(src, &opts()),
            Err(IngestError::NonMonotonicCues { index: 1, .. })
        ));
    }

    #[test]
    fn malformed_timestamp() {
        let err = parse_srt(b"1\n00:00:0x,000 --> 00:00:02,000\nA\n", &opts()).unwrap_err();
        assert_eq!(
            err,
            IngestError::MalformedTimestamp {
                line: 2,
                value: "00:00:0x,000".into()
            }
        );
        assert!(parse_srt(b"1\n00:61:00,000 --> 01:00:00,000\nA\n", &opts()).is_err());
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(parse_srt(b"", &opts()).unwrap_err(), IngestError::EmptyFile);
        assert_eq!(parse_srt(b"\xEF\xBB\xBF \n\n", &opts()).unwrap_err(), IngestError::EmptyFile);
        assert_eq!(parse_srt(b"just text\n", &opts()).unwrap_err(), IngestError::EmptyFile);
    }

    #[test]
    fn bom_crlf_and_missing_separator() {
        let src = "\u{feff}1\r\n00:00:01,000 --> 00:00:02,000\r\n<i>One</i>\r\n2\r\n00:00:02,000 --> 00:00:03,000\r\nTwo\r\n";
        let t = parse_srt(src.as_bytes(), &opts()).unwrap();
        let texts: Vec<_> = t.cues.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, ["One", "Two"]);
    }

    #[test]
    fn invalid_utf8() {
        assert_eq!(
            parse_srt(b"1\n00:00:00,000 --> 00:00:01,000\n\xff\n", &opts()).unwrap_err(),
            IngestError::InvalidUtf8
        );
    }

    #[test]
    fn timestamp_forms() {
        assert_eq!(parse_timestamp("01:02:03,004", &[','], false), Some(3_723_004));
        assert_eq!(parse_timestamp("00:00:01.5", &[',', '.'], false), Some(1500));
        assert_eq!(parse_timestamp("02:03.004", &['.'], true), Some(123_004));
        assert_eq!(parse_timestamp("02:03.004", &['.'], false), None);
        assert_eq!(parse_timestamp("00:00:01", &['.'], false), None);
        assert_eq!(parse_timestamp("00:00:01,0000", &[','], false), None);
    }
}
