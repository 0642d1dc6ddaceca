use super::srt::parse_timestamp;
use super::{decode_utf8, format_timestamp, strip_tags, IngestError, IngestOptions, RawCue, Transcript};

/// Parse a WebVTT file.
///
/// Cue settings, identifiers, `NOTE`/`STYLE`/`REGION` blocks and voice or
/// class spans are discarded. A `Language:` header line overrides
/// `opts.language`.
pub fn parse_vtt(bytes: &[u8], opts: &IngestOptions) -> Result<Transcript, IngestError> {
    let text = decode_utf8(bytes)?;
    if text.trim().is_empty() {
        return Err(IngestError::EmptyFile);
    }
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let header = lines.first().copied().unwrap_or("");
    let valid_header = header == "WEBVTT"
        || header.starts_with("WEBVTT ")
        || header.starts_with("WEBVTT\t");
    if !valid_header {
        return Err(IngestError::MissingHeader);
    }

    let mut language = opts.language.clone();
    let mut i = 1;
    while i < lines.len() && !lines[i].trim().is_empty() {
        if let Some(lang) = lines[i].strip_prefix("Language:") {
            language = lang.trim().to_string();
        }
        i += 1;
    }

    let mut raw = Vec::new();
    while i < lines.len() {
        // Skip blank lines between blocks.
        while i < lines.len() && lines[i].trim().is_empty() {
            i += 1;
        }
        if i >= lines.len() {
            break;
        }
        let block_start = i;
        while i < lines.len() && !lines[i].trim().is_empty() {
            i += 1;
        }
        let block = &lines[block_start..i];
        let first = block[0].trim_start();
        if first.starts_with("NOTE") || first == "STYLE" || first == "REGION" {
            continue;
        }
        let Some(timing_pos) = block.iter().position(|l| l.contains("-->")) else {
            continue;
        };
        let line_no = block_start + timing_pos + 1;
        let (start_ms, end_ms) = parse_timing(block[timing_pos], line_no)?;
        let payload: Vec<&str> = block[timing_pos + 1..].iter().map(|l| l.trim()).collect();
        raw.push(RawCue {
            start_ms,
            end_ms,
            text: decode_entities(&strip_tags(&payload.join(" "))),
        });
    }
    if raw.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    Transcript::from_raw(
        opts.video_id.clone(),
        language,
        None,
        raw,
        opts.overlap_tolerance_ms,
    )
}

fn parse_timing(line: &str, line_no: usize) -> Result<(u64, u64), IngestError> {
    let (left, right) = line.split_once("-->").expect("caller checked for arrow");
    let start = left.trim();
    // Anything after the end timestamp is cue settings.
    let end = right.split_whitespace().next().unwrap_or("");
    let bad = |v: &str| IngestError::MalformedTimestamp {
        line: line_no,
        value: v.to_string(),
    };
    let start_ms = parse_timestamp(start, &['.'], true).ok_or_else(|| bad(start))?;
    let end_ms = parse_timestamp(end, &['.'], true).ok_or_else(|| bad(end))?;
    Ok((start_ms, end_ms))
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    s.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&nbsp;", " ")
        .replace("&lrm;", "")
        .replace("&rlm;", "")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&")
}

/// Write a transcript as WebVTT, escaping markup characters and
/// recording the language in the header.
pub fn to_vtt(t: &Transcript) -> String {
    let mut out = format!("WEBVTT\nLanguage: {}\n\n", t.language);
    for cue in &t.cues {
        let text = cue.text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        out.push_str(&format!(
            "{} --> {}\n{}\n\n",
            format_timestamp(cue.start_ms, '.'),
            format_timestamp(cue.end_ms, '.'),
            text
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> IngestOptions {
        IngestOptions::default()
    }

    #[test]
    fn voice_tag_and_short_timestamps() {
        let t = parse_vtt(b"WEBVTT\n\n00:10.000 --> 00:12.000\n<v Speaker>Hi.", &opts()).unwrap();
        assert_eq!(t.cues.len(), 1);
        assert_eq!(t.cues[0].start_ms, 10_000);
        assert_eq!(t.cues[0].end_ms, 12_000);
        assert_eq!(t.cues[0].text, "Hi.");
    }

    #[test]
    fn missing_header() {
        assert_eq!(
            parse_vtt(b"00:10.000 --> 00:12.000\nHi.", &opts()).unwrap_err(),
            IngestError::MissingHeader
        );
        assert_eq!(
            parse_vtt(b"WEBVTTX\n\n00:10.000 --> 00:12.000\nHi.", &opts()).unwrap_err(),
            IngestError::MissingHeader
        );
    }

    #[test]
    fn header_only_is_empty() {
        assert_eq!(parse_vtt(b"WEBVTT\n\n", &opts()).unwrap_err(), IngestError::EmptyFile);
    }

    #[test]
    fn srt_style_comma_is_malformed() {
        let err = parse_vtt(b"WEBVTT\n\n00:00:01,000 --> 00:00:02.000\nx", &opts()).unwrap_err();
        assert!(matches!(err, IngestError::MalformedTimestamp { line: 3, .. }));
    }

    #[test]
    fn notes_styles_identifiers_and_language() {
        let src = "WEBVTT - lecture\nKind: captions\nLanguage: de\n\nNOTE written by hand\n\nSTYLE\n::cue { color: red }\n\nintro\n00:00:01.000 --> 00:00:02.000 align:start position:10%\n<c.loud>Guten</c> Tag &amp; willkommen.\n";
        let t = parse_vtt(src.as_bytes(), &opts()).unwrap();
        assert_eq!(t.language, "de");
        assert_eq!(t.cues.len(), 1);
        assert_eq!(t.cues[0].text, "Guten Tag & willkommen.");
    }
}
