use super::BundleError;
use crate::segment::{context_window, segment, Abbreviations, ContextWindow, Segmentation};
use crate::transcript::Transcript;
use crate::Level;

pub const DEFAULT_INTERVAL_MS: u64 = 5000;

/// Coverage and slot width. Both ends are inclusive slot boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRange {
    pub interval_ms: u64,
    pub coverage_start_ms: u64,
    pub coverage_end_ms: u64,
}

impl SlotRange {
    pub fn new(interval_ms: u64, coverage_start_ms: u64, coverage_end_ms: u64) -> Self {
        Self {
            interval_ms,
            coverage_start_ms,
            coverage_end_ms,
        }
    }

    pub fn slot_start(&self, k: usize) -> u64 {
        self.coverage_start_ms + k as u64 * self.interval_ms
    }
}

/// `floor((end - start) / interval) + 1`.
pub fn slot_count(range: &SlotRange) -> Result<usize, BundleError> {
    if range.interval_ms == 0 {
        return Err(BundleError::InvalidRange("interval_ms must be positive".into()));
    }
    if range.coverage_end_ms < range.coverage_start_ms {
        return Err(BundleError::InvalidRange(format!(
            "coverage ends at {} before it starts at {}",
            range.coverage_end_ms, range.coverage_start_ms
        )));
    }
    Ok(((range.coverage_end_ms - range.coverage_start_ms) / range.interval_ms) as usize + 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedSlot {
    pub slot_index: usize,
    pub eval_ms: u64,
    pub level: Level,
    /// `None` when no sentence had completed by `eval_ms`.
    pub window: Option<ContextWindow>,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub range: SlotRange,
    pub segmentation: Segmentation,
    /// Level-1 slots in index order, then level-2 slots.
    pub slots: Vec<PlannedSlot>,
}

/// Evaluate the context window for every slot boundary and both levels.
pub fn plan_slots(
    transcript: &Transcript,
    range: SlotRange,
    abbreviations: &Abbreviations,
    max_context_chars: usize,
) -> Result<Plan, BundleError> {
    let count = slot_count(&range)?;
    if range.coverage_end_ms > transcript.duration_ms {
        return Err(BundleError::InvalidRange(format!(
            "coverage end {} exceeds transcript duration {}",
            range.coverage_end_ms, transcript.duration_ms
        )));
    }
    let segmentation = segment(transcript, abbreviations);
    let mut slots = Vec::with_capacity(count * Level::ALL.len());
    for level in Level::ALL {
        for k in 0..count {
            let eval_ms = range.slot_start(k);
            let window = context_window(
                &segmentation.sentences,
                &segmentation.full_text,
                eval_ms,
                level,
                max_context_chars,
            )
            .ok();
            slots.push(PlannedSlot {
                slot_index: k,
                eval_ms,
                level,
                window,
            });
        }
    }
    Ok(Plan {
        range,
        segmentation,
        slots,
    })
}
