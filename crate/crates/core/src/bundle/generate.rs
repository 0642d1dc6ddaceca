use futures::stream::{self, StreamExt};
use std::collections::BTreeMap;

use super::plan::{plan_slots, SlotRange};
use super::{
    explanation_key, BundleError, Explanation, ExplanationBundle, ExplanationSlot, GeneratorMeta,
    SlotStatus, DEFAULT_INTERVAL_MS,
};
use crate::emissions::RunLedger;
use crate::prompt::{build_prompt, TemplateSet};
use crate::provider::{
    retrying, Provider, ProviderError, ProviderRequest, RetryPolicy, TokenUsage,
    DEFAULT_MAX_OUTPUT_TOKENS,
};
use crate::segment::{Abbreviations, ContextWindow, DEFAULT_MAX_CONTEXT_CHARS};
use crate::transcript::Transcript;
use crate::Level;

pub const DEFAULT_ABORT_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct BundleConfig {
    pub interval_ms: u64,
    pub coverage_start_ms: u64,
    /// Defaults to the transcript duration.
    pub coverage_end_ms: Option<u64>,
    pub max_context_chars: usize,
    pub abbreviations: Abbreviations,
    pub templates: TemplateSet,
    pub retry: RetryPolicy,
    /// Largest tolerated share of failed provider calls before the run aborts.
    pub abort_threshold: f64,
    pub max_output_tokens: u32,
    pub temperature: f32,
    /// Overrides the provider's own concurrency cap when set.
    pub max_in_flight: Option<usize>,
    /// Fixed creation timestamp for reproducible bundles. When unset,
    /// `SOURCE_DATE_EPOCH` is honoured, then the current time.
    pub created_at: Option<String>,
}

impl Default for BundleConfig {
    fn default() -> Self {
        Self {
            interval_ms: DEFAULT_INTERVAL_MS,
            coverage_start_ms: 0,
            coverage_end_ms: None,
            max_context_chars: DEFAULT_MAX_CONTEXT_CHARS,
            abbreviations: Abbreviations::default(),
            templates: TemplateSet::default(),
            retry: RetryPolicy::default(),
            abort_threshold: DEFAULT_ABORT_THRESHOLD,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            temperature: 0.0,
            max_in_flight: None,
            created_at: None,
        }
    }
}

impl BundleConfig {
    pub fn slot_range(&self, transcript: &Transcript) -> SlotRange {
        SlotRange::new(
            self.interval_ms,
            self.coverage_start_ms,
            self.coverage_end_ms.unwrap_or(transcript.duration_ms),
        )
    }
}

fn created_at(cfg: &BundleConfig) -> String {
    if let Some(ts) = &cfg.created_at {
        return ts.clone();
    }
    let epoch = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0));
    epoch
        .unwrap_or_else(chrono::Utc::now)
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Result of a generation run.
#[derive(Debug, Clone)]
pub struct GenerationRun {
    pub bundle: ExplanationBundle,
    /// One entry per provider call, in key order.
    pub ledger: RunLedger,
    /// Usage if every generated slot had triggered its own call.
    pub no_dedup_totals: TokenUsage,
    pub provider_calls: usize,
}

struct Job {
    key: String,
    window: ContextWindow,
    tag: String,
}

/// Generate explanations for every slot of the configured coverage.
///
/// Slots that share (level, targets) share a single provider call. Calls
/// run concurrently up to the provider's in-flight cap. A failed call marks
/// its slots unavailable; the run aborts with
/// [`BundleError::ProviderExhausted`] once failures exceed
/// `abort_threshold` of all distinct calls.
pub async fn generate_bundle(
    transcript: &Transcript,
    provider: &dyn Provider,
    cfg: &BundleConfig,
) -> Result<GenerationRun, BundleError> {
    let range = cfg.slot_range(transcript);
    let plan = plan_slots(transcript, range, &cfg.abbreviations, cfg.max_context_chars)?;

    // First slot (level-1 slots come first) naming each key owns the request.
    let mut jobs: Vec<Job> = Vec::new();
    let mut seen = BTreeMap::new();
    for slot in &plan.slots {
        if let Some(window) = &slot.window {
            let key = explanation_key(slot.level, &window.target_sentence_indices);
            seen.entry(key.clone()).or_insert_with(|| {
                jobs.push(Job {
                    tag: format!("{}/{}/{}", transcript.video_id, slot.slot_index, slot.level),
                    key,
                    window: window.clone(),
                });
            });
        }
    }
    let total = jobs.len();
    let allowed_failures = (cfg.abort_threshold.clamp(0.0, 1.0) * total as f64).floor() as usize;
    let concurrency = cfg.max_in_flight.unwrap_or_else(|| provider.max_in_flight()).max(1);

    let mut outcomes: Vec<Option<Result<(String, TokenUsage), ProviderError>>> = vec![None; total];
    let mut failed = 0;
    let mut calls = 0;
    {
        let mut results = stream::iter(jobs.iter().enumerate())
            .map(|(i, job)| async move {
                let request = ProviderRequest::new(build_prompt(&job.window, &cfg.templates), job.tag.clone())
                    .with_max_output_tokens(cfg.max_output_tokens)
                    .with_temperature(cfg.temperature);
                let outcome = retrying(provider, &request, &cfg.retry)
                    .await
                    .map(|r| (r.response.text, r.response.usage, r.attempts));
                (i, outcome)
            })
            .buffer_unordered(concurrency);
        while let Some((i, outcome)) = results.next().await {
            calls += 1;
            let outcome = match outcome {
                Ok((text, _, _)) if text.trim().is_empty() => Err(ProviderError::BackendError {
                    status: 200,
                    body: "empty explanation".into(),
                }),
                Ok((text, usage, _)) => Ok((text, usage)),
                Err(e) => Err(e),
            };
            if let Err(e) = &outcome {
                failed += 1;
                tracing::warn!(tag = %jobs[i].tag, error = %e, "explanation failed");
                if failed > allowed_failures {
                    return Err(BundleError::ProviderExhausted {
                        failed,
                        total,
                        last: e.clone(),
                    });
                }
            }
            outcomes[i] = Some(outcome);
        }
    }

    let mut explanations = BTreeMap::new();
    let mut errors = BTreeMap::new();
    let mut ledger = RunLedger::new(&transcript.video_id);
    for (job, outcome) in jobs.iter().zip(outcomes) {
        match outcome.expect("every job finished") {
            Ok((text, usage)) => {
                ledger.record(&job.tag, usage);
                explanations.insert(
                    job.key.clone(),
                    Explanation {
                        level: job.window.level,
                        target_sentence_indices: job.window.target_sentence_indices.clone(),
                        text,
                        usage,
                    },
                );
            }
            Err(e) => {
                errors.insert(job.key.clone(), e.to_string());
            }
        }
    }

    let mut no_dedup_totals = TokenUsage::default();
    let slots = plan
        .slots
        .iter()
        .map(|planned| {
            let Some(window) = &planned.window else {
                return ExplanationSlot {
                    slot_index: planned.slot_index,
                    slot_start_ms: planned.eval_ms,
                    level: planned.level,
                    target_sentence_indices: Vec::new(),
                    explanation_ref: None,
                    status: SlotStatus::Unavailable,
                    note: Some("no sentence completed yet".into()),
                };
            };
            let key = explanation_key(planned.level, &window.target_sentence_indices);
            let generated = explanations.get(&key);
            if let Some(e) = generated {
                no_dedup_totals += e.usage;
            }
            ExplanationSlot {
                slot_index: planned.slot_index,
                slot_start_ms: planned.eval_ms,
                level: planned.level,
                target_sentence_indices: window.target_sentence_indices.clone(),
                status: if generated.is_some() { SlotStatus::Generated } else { SlotStatus::Unavailable },
                note: errors.get(&key).map(|e| format!("generation failed: {e}")),
                explanation_ref: generated.map(|_| key),
            }
        })
        .collect();

    let mut template_hashes = BTreeMap::new();
    for level in Level::ALL {
        template_hashes.insert(format!("level{level}"), cfg.templates.for_level(level).hash());
    }
    let bundle = ExplanationBundle {
        video_id: transcript.video_id.clone(),
        language: transcript.language.clone(),
        interval_ms: range.interval_ms,
        coverage_start_ms: range.coverage_start_ms,
        coverage_end_ms: range.coverage_end_ms,
        explanations,
        slots,
        generator_meta: GeneratorMeta {
            model: provider.model_name().to_string(),
            template_hashes,
            created_at: created_at(cfg),
        },
    };
    debug_assert!(bundle.validate().is_ok());
    Ok(GenerationRun {
        bundle,
        ledger,
        no_dedup_totals,
        provider_calls: calls,
    })
}
