use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{char_to_byte, Sentence};
use crate::Level;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WindowError {
    #[error("no sentence has been completed by {trigger_ms} ms")]
    NoTargetAvailable { trigger_ms: u64, level: Level },
}

/// The text handed to a provider for one trigger time and level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextWindow {
    pub context_text: String,
    pub target_sentence_indices: Vec<usize>,
    pub trigger_ms: u64,
    pub level: Level,
}

/// Select the target sentence(s) completed by `trigger_ms` and the context
/// that leads up to them.
///
/// Level 1 targets the last sentence with `end_ms <= trigger_ms`; level 2
/// the last two, falling back to one when only one has completed. Context
/// runs from the transcript start through the last target and is trimmed
/// from the front, whole sentences at a time, to `max_context_chars`. Target
/// sentences are never trimmed, even when they alone exceed the cap.
pub fn context_window(
    sentences: &[Sentence],
    full_text: &str,
    trigger_ms: u64,
    level: Level,
    max_context_chars: usize,
) -> Result<ContextWindow, WindowError> {
    // Sentence end times are non-decreasing, so completed sentences form a prefix.
    let completed = sentences.partition_point(|s| s.end_ms <= trigger_ms);
    if completed == 0 {
        return Err(WindowError::NoTargetAvailable { trigger_ms, level });
    }
    let first_target = completed.saturating_sub(level.target_count());
    let end = sentences[completed - 1].char_span.1;

    let first_kept = sentences[..=first_target]
        .partition_point(|s| end - s.char_span.0 > max_context_chars)
        .min(first_target);
    let start = sentences[first_kept].char_span.0;
    let context_text = full_text[char_to_byte(full_text, start)..char_to_byte(full_text, end)].to_string();

    Ok(ContextWindow {
        context_text,
        target_sentence_indices: (first_target..completed).map(|i| sentences[i].index).collect(),
        trigger_ms,
        level,
    })
}
