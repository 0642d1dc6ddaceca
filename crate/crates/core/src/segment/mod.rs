//! Sentence segmentation with interpolated timestamps, and the context
//! window that feeds each explanation.

mod punctuate;
mod window;

pub use punctuate::{
    restore_punctuation, restore_punctuation_rule, restore_punctuation_with_provider,
    PunctuationError, PunctuationStrategy, ProviderPunctuation,
};
pub use window::{context_window, ContextWindow, WindowError};

use serde::{Deserialize, Serialize};

use crate::transcript::Transcript;

pub const DEFAULT_GAP_MS: u64 = 1200;
pub const DEFAULT_MAX_CONTEXT_CHARS: usize = 12_000;

/// Abbreviations that end in a full stop without ending a sentence.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Dr.", "Mr.", "Mrs.", "Prof.", "z.B.", "bzw.", "etc.", "vs.", "Nr.",
];

/// A punctuation-delimited sentence. `char_span` is a half-open range of
/// Unicode scalar offsets into the transcript's joined text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    pub start_ms: u64,
    pub end_ms: u64,
    pub char_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abbreviations(Vec<String>);

impl Default for Abbreviations {
    fn default() -> Self {
        Self::new(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl Abbreviations {
    pub fn new<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(items.into_iter().map(|s| s.as_ref().to_lowercase()).collect())
    }

    pub fn contains(&self, token: &str) -> bool {
        let token = token.to_lowercase();
        self.0.contains(&token)
    }
}

/// Segmented transcript: the joined text plus its terminated sentences.
/// Any trailing text without a terminal mark is kept in `full_text` only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub full_text: String,
    pub sentences: Vec<Sentence>,
}

impl Segmentation {
    /// Text after the last terminated sentence, if any.
    pub fn trailing_fragment(&self) -> Option<&str> {
        let consumed = self.sentences.last().map_or(0, |s| s.char_span.1);
        let byte = char_to_byte(&self.full_text, consumed);
        let rest = self.full_text[byte..].trim();
        (!rest.is_empty()).then_some(rest)
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Split plain text into sentence spans (char offsets). A boundary is a run
/// of `.`, `!` or `?` followed by whitespace or the end of the text, unless
/// the word ending in that single `.` is a guarded abbreviation.
pub fn split_sentences(text: &str, abbreviations: &Abbreviations) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if start.is_none() {
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            start = Some(i);
        }
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < chars.len() && is_terminal(chars[i]) {
            i += 1;
        }
        let at_end = i == chars.len();
        if !at_end && !chars[i].is_whitespace() {
            continue;
        }
        let s = start.expect("set above");
        if !at_end && i - run_start == 1 && chars[run_start] == '.' {
            let word_start = chars[s..run_start]
                .iter()
                .rposition(|c| c.is_whitespace())
                .map_or(s, |p| s + p + 1);
            let word: String = chars[word_start..i].iter().collect();
            if abbreviations.contains(&word) {
                continue;
            }
        }
        spans.push((s, i));
        start = None;
    }
    spans
}

/// Split a punctuated transcript into sentences with interpolated times.
///
/// A character offset inside a cue maps linearly onto the cue's time span;
/// a sentence takes its start from its first character and its end from the
/// offset just past its last character.
pub fn segment(transcript: &Transcript, abbreviations: &Abbreviations) -> Segmentation {
    let full_text = transcript.joined_text();
    // (first char offset, char length) of each cue in the joined text.
    let mut cue_ranges = Vec::with_capacity(transcript.cues.len());
    let mut offset = 0;
    for cue in &transcript.cues {
        let len = cue.text.chars().count();
        cue_ranges.push((offset, len));
        offset += len + 1;
    }
    let owning_cue = |pos: usize| -> usize {
        let idx = cue_ranges.partition_point(|&(start, _)| start <= pos);
        idx.saturating_sub(1)
    };
    let time_at = |cue_idx: usize, pos: usize| -> u64 {
        let cue = &transcript.cues[cue_idx];
        let (start, len) = cue_ranges[cue_idx];
        let local = (pos - start).min(len) as u64;
        let span = cue.end_ms - cue.start_ms;
        cue.start_ms + local * span / len.max(1) as u64
    };

    let spans = split_sentences(&full_text, abbreviations);
    let chars: Vec<char> = full_text.chars().collect();
    let sentences = spans
        .into_iter()
        .enumerate()
        .map(|(index, (a, b))| Sentence {
            index,
            text: chars[a..b].iter().collect(),
            start_ms: time_at(owning_cue(a), a),
            end_ms: time_at(owning_cue(b - 1), b),
            char_span: (a, b),
        })
        .collect();
    Segmentation {
        full_text,
        sentences,
    }
}

pub(crate) fn char_to_byte(text: &str, char_offset: usize) -> usize {
    text.char_indices()
        .nth(char_offset)
        .map_or(text.len(), |(b, _)| b)
}
