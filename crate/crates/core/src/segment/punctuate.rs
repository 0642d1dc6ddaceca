use thiserror::Error;

use crate::emissions::SharedLedger;
use crate::prompt::PromptTemplate;
use crate::provider::{retrying, Provider, ProviderError, ProviderRequest, RetryPolicy};
use crate::transcript::{Transcript, TranscriptCue};

#[derive(Debug, Error)]
pub enum PunctuationError {
    #[error("punctuation provider failed: {0}")]
    ProviderFailure(#[from] ProviderError),
    #[error("provider changed the words of chunk {chunk}: {detail}")]
    WordsChanged { chunk: usize, detail: String },
}

/// Settings for delegating punctuation to a provider.
pub struct ProviderPunctuation<'a> {
    pub provider: &'a dyn Provider,
    pub template: &'a PromptTemplate,
    pub retry: RetryPolicy,
    /// Upper bound on joined cue text per request.
    pub max_chunk_chars: usize,
    pub max_output_tokens: u32,
    pub ledger: Option<&'a SharedLedger>,
}

pub enum PunctuationStrategy<'a> {
    Rule { gap_ms: u64, },
    Provider(ProviderPunctuation<'a>),
}

pub async fn restore_punctuation(
    transcript: &Transcript,
    strategy: &PunctuationStrategy<'_>,
) -> Result<Transcript, PunctuationError> {
    match strategy {
        PunctuationStrategy::Rule { gap_ms } => Ok(restore_punctuation_rule(transcript, *gap_ms)),
        PunctuationStrategy::Provider(p) => restore_punctuation_with_provider(transcript, p).await,
    }
}

fn has_terminal_mark(t: &Transcript) -> bool {
    t.cues.iter().any(|c| c.text.contains(['.', '!', '?']))
}

/// Languages that capitalize nouns, where a capital letter says nothing
/// about sentence starts.
fn capitalizes_nouns(language: &str) -> bool {
    let primary = language.split(['-', '_']).next().unwrap_or("").to_ascii_lowercase();
    matches!(primary.as_str(), "de" | "lb")
}

fn first_word(text: &str) -> &str {
    text.split_whitespace().next().unwrap_or("")
}

fn starts_capitalized(text: &str) -> bool {
    let word = first_word(text);
    let pronoun_i = word == "I" || word.starts_with("I'") || word.starts_with("I\u{2019}");
    !pronoun_i && word.chars().next().is_some_and(char::is_uppercase)
}

fn capitalize_first_letter(text: &str) -> String {
    match text.char_indices().find(|(_, c)| c.is_alphabetic()) {
        Some((i, c)) if c.is_lowercase() => {
            let mut out = String::with_capacity(text.len() + 2);
            out.push_str(&text[..i]);
            out.extend(c.to_uppercase());
            out.push_str(&text[i + c.len_utf8()..]);
            out
        }
        _ => text.to_string(),
    }
}

fn end_sentence(text: &str) -> String {
    let trimmed = text.trim_end_matches([',', ';', ':']);
    format!("{trimmed}.")
}

/// Heuristic punctuation for unpunctuated captions.
///
/// A cue boundary becomes a sentence boundary after a pause of at least
/// `gap_ms`, or when the next cue opens with a capitalized word other than
/// "I" (skipped for languages that capitalize nouns). The transcript end is
/// always a boundary. Boundaries receive a full stop and the following cue
/// is capitalized. Transcripts that already contain `.`, `!` or `?` are
/// returned unchanged, which makes the rule idempotent.
pub fn restore_punctuation_rule(transcript: &Transcript, gap_ms: u64) -> Transcript {
    if has_terminal_mark(transcript) {
        return transcript.clone();
    }
    let use_case = !capitalizes_nouns(&transcript.language);
    let cues = &transcript.cues;
    let mut out: Vec<TranscriptCue> = Vec::with_capacity(cues.len());
    let mut sentence_start = true;
    for (i, cue) in cues.iter().enumerate() {
        let boundary_after = match cues.get(i + 1) {
            None => true,
            Some(next) => {
                let gap = next.start_ms.saturating_sub(cue.end_ms);
                gap >= gap_ms || (use_case && starts_capitalized(&next.text))
            }
        };
        let mut text = if sentence_start {
            capitalize_first_letter(&cue.text)
        } else {
            cue.text.clone()
        };
        if boundary_after {
            text = end_sentence(&text);
        }
        out.push(TranscriptCue { text, ..cue.clone() });
        sentence_start = boundary_after;
    }
    Transcript {
        cues: out,
        ..transcript.clone()
    }
}

/// Letters and digits of a token, lowercased. Punctuation-only tokens map
/// to an empty core.
fn word_core(token: &str) -> String {
    token
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Group consecutive cues so that each group's joined text stays within
/// `max_chars` (a single longer cue forms its own group).
fn chunk_cues(cues: &[TranscriptCue], max_chars: usize) -> Vec<std::ops::Range<usize>> {
    let mut chunks = Vec::new();
    let mut start = 0;
    let mut len = 0;
    for (i, cue) in cues.iter().enumerate() {
        let add = cue.text.chars().count() + usize::from(i > start);
        if i > start && len + add > max_chars {
            chunks.push(start..i);
            start = i;
            len = cue.text.chars().count();
        } else {
            len += add;
        }
    }
    if start < cues.len() {
        chunks.push(start..cues.len());
    }
    chunks
}

/// Map the provider's punctuated words back onto the original cues.
///
/// Every original word must reappear in order with the same letters and
/// digits (case-insensitive); only punctuation and case may change.
fn realign(
    cues: &[TranscriptCue],
    reply: &str,
    chunk: usize,
) -> Result<Vec<String>, PunctuationError> {
    // (cue position within chunk, core) for every word carrying letters or digits.
    let originals: Vec<(usize, String)> = cues
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| c.text.split_whitespace().map(move |w| (ci, word_core(w))))
        .filter(|(_, core)| !core.is_empty())
        .collect();

    let mut texts: Vec<Vec<String>> = vec![Vec::new(); cues.len()];
    let mut next = 0;
    let mut last_cue = 0;
    for token in reply.split_whitespace() {
        let core = word_core(token);
        if core.is_empty() {
            // Bare punctuation rides with the preceding word.
            texts[last_cue].push(token.to_string());
            continue;
        }
        let Some((cue_pos, expected)) = originals.get(next) else {
            return Err(PunctuationError::WordsChanged {
                chunk,
                detail: format!("unexpected extra word {token:?}"),
            });
        };
        if *expected != core {
            return Err(PunctuationError::WordsChanged {
                chunk,
                detail: format!("expected {expected:?}, got {token:?}"),
            });
        }
        texts[*cue_pos].push(token.to_string());
        last_cue = *cue_pos;
        next += 1;
    }
    if next != originals.len() {
        return Err(PunctuationError::WordsChanged {
            chunk,
            detail: format!("{} of {} words missing", originals.len() - next, originals.len()),
        });
    }
    Ok(texts
        .into_iter()
        .zip(cues)
        .map(|(words, cue)| if words.is_empty() { cue.text.clone() } else { words.join(" ") })
        .collect())
}

/// Ask a provider to punctuate the transcript chunk by chunk, then write the
/// punctuated words back into the original cues. Cue timing is untouched.
pub async fn restore_punctuation_with_provider(
    transcript: &Transcript,
    opts: &ProviderPunctuation<'_>,
) -> Result<Transcript, PunctuationError> {
    let mut cues = transcript.cues.clone();
    for (chunk_idx, range) in chunk_cues(&transcript.cues, opts.max_chunk_chars.max(1))
        .into_iter()
        .enumerate()
    {
        let chunk = &transcript.cues[range.clone()];
        let joined = chunk.iter().map(|c| c.text.as_str()).collect::<Vec<_>>().join(" ");
        let tag = format!("{}/punctuation/{chunk_idx}", transcript.video_id);
        let request = ProviderRequest::new(opts.template.render(&joined), tag.clone())
            .with_max_output_tokens(opts.max_output_tokens);
        let done = retrying(opts.provider, &request, &opts.retry).await?;
        if let Some(ledger) = opts.ledger {
            ledger.record(tag, done.response.usage);
        }
        let texts = realign(chunk, &done.response.text, chunk_idx)?;
        for (cue, text) in cues[range].iter_mut().zip(texts) {
            cue.text = text;
        }
    }
    Ok(Transcript {
        cues,
        ..transcript.clone()
    })
}
