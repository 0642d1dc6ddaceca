//! Token accounting for generation runs and conversion to kg CO2e.
//!
//! Emissions are modelled with one uniform factor per token, prompt and
//! completion tokens weighted equally. The shipped default is the
//! least-squares fit through the origin over two published reference runs
//! of a GPT-4 explanation pipeline.

use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Mutex;
use thiserror::Error;

use crate::provider::TokenUsage;

/// kg CO2e per token, fitted over [`REFERENCE_RUNS`].
pub const DEFAULT_FACTOR_KG_PER_TOKEN: f64 = 3.517_447_050_978_295e-4;

/// Reference runs: (token usage, reported kg CO2e). An English lecture
/// covered 00:10–13:45 and a German one 00:30–16:05.
pub const REFERENCE_RUNS: [(TokenUsage, f64); 2] = [
    (
        TokenUsage {
            prompt_tokens: 390_962,
            completion_tokens: 37_435,
        },
        150.7,
    ),
    (
        TokenUsage {
            prompt_tokens: 531_619,
            completion_tokens: 63_727,
        },
        209.4,
    ),
];

#[derive(Debug, Error)]
pub enum EmissionsError {
    #[error("carbon factor must be positive, got {0}")]
    NonPositiveFactor(f64),
    #[error("reference set has no pair with positive tokens")]
    EmptyReference,
    #[error("ledger totals {recorded:?} do not match the sum of entries {summed:?}")]
    InconsistentLedger {
        recorded: TokenUsage,
        summed: TokenUsage,
    },
    #[error("ledger I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("ledger JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionEstimate {
    pub kg_co2e: f64,
    pub factor_kg_per_token: f64,
    pub total_tokens: u64,
}

pub fn estimate(usage: TokenUsage, factor_kg_per_token: f64) -> Result<EmissionEstimate, EmissionsError> {
    if factor_kg_per_token.is_nan() || factor_kg_per_token <= 0.0 || factor_kg_per_token.is_infinite() {
        return Err(EmissionsError::NonPositiveFactor(factor_kg_per_token));
    }
    let total_tokens = usage.total();
    Ok(EmissionEstimate {
        kg_co2e: factor_kg_per_token * total_tokens as f64,
        factor_kg_per_token,
        total_tokens,
    })
}

/// Least-squares factor through the origin: `Σ kg·t / Σ t²`.
pub fn derive_factor(reference: &[(TokenUsage, f64)]) -> Result<f64, EmissionsError> {
    let (num, den) = reference
        .iter()
        .filter(|(u, _)| u.total() > 0)
        .fold((0.0, 0.0), |(num, den), (u, kg)| {
            let t = u.total() as f64;
            (num + kg * t, den + t * t)
        });
    if den == 0.0 {
        return Err(EmissionsError::EmptyReference);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub request_tag: String,
    pub usage: TokenUsage,
}

/// Token usage of one generation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLedger {
    pub video_id: String,
    pub entries: Vec<LedgerEntry>,
    pub totals: TokenUsage,
}

impl RunLedger {
    pub fn new(video_id: impl Into<String>) -> Self {
        Self {
            video_id: video_id.into(),
            entries: Vec::new(),
            totals: TokenUsage::default(),
        }
    }

    pub fn record(&mut self, request_tag: impl Into<String>, usage: TokenUsage) {
        self.entries.push(LedgerEntry {
            request_tag: request_tag.into(),
            usage,
        });
        self.totals += usage;
    }

    pub fn merge(&mut self, other: RunLedger) {
        self.totals += other.totals;
        self.entries.extend(other.entries);
    }

    pub fn summed_entries(&self) -> TokenUsage {
        self.entries.iter().map(|e| e.usage).sum()
    }

    pub fn check(&self) -> Result<(), EmissionsError> {
        let summed = self.summed_entries();
        if summed != self.totals {
            return Err(EmissionsError::InconsistentLedger {
                recorded: self.totals,
                summed,
            });
        }
        Ok(())
    }
}

/// A ledger that many tasks append to at once.
#[derive(Debug)]
pub struct SharedLedger(Mutex<RunLedger>);

impl SharedLedger {
    pub fn new(video_id: impl Into<String>) -> Self {
        Self(Mutex::new(RunLedger::new(video_id)))
    }

    pub fn record(&self, request_tag: impl Into<String>, usage: TokenUsage) {
        self.0.lock().expect("ledger lock poisoned").record(request_tag, usage);
    }

    pub fn snapshot(&self) -> RunLedger {
        self.0.lock().expect("ledger lock poisoned").clone()
    }

    pub fn into_inner(self) -> RunLedger {
        self.0.into_inner().expect("ledger lock poisoned")
    }
}

/// Contents of `emissions.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionsReport {
    pub video_id: String,
    pub entries: Vec<LedgerEntry>,
    pub totals: TokenUsage,
    pub factor_kg_per_token: f64,
    pub kg_co2e: f64,
    /// Usage had every slot been generated separately, without sharing
    /// explanations between slots with the same target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub no_dedup_totals: Option<TokenUsage>,
}

impl EmissionsReport {
    pub fn new(ledger: RunLedger, factor_kg_per_token: f64) -> Result<Self, EmissionsError> {
        ledger.check()?;
        let est = estimate(ledger.totals, factor_kg_per_token)?;
        Ok(Self {
            video_id: ledger.video_id,
            entries: ledger.entries,
            totals: ledger.totals,
            factor_kg_per_token,
            kg_co2e: est.kg_co2e,
            no_dedup_totals: None,
        })
    }

    pub fn with_no_dedup_totals(mut self, usage: TokenUsage) -> Self {
        self.no_dedup_totals = Some(usage);
        self
    }

    pub fn ledger(&self) -> RunLedger {
        RunLedger {
            video_id: self.video_id.clone(),
            entries: self.entries.clone(),
            totals: self.totals,
        }
    }

    pub fn load(path: &Path) -> Result<Self, EmissionsError> {
        let report: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        report.ledger().check()?;
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report always serializes")
    }

    pub fn write(&self, path: &Path) -> Result<(), EmissionsError> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// One-line human summary, kg rounded to one decimal.
pub fn summary_line(video_id: &str, usage: TokenUsage, est: &EmissionEstimate) -> String {
    format!(
        "{video_id}: {} prompt + {} completion = {} tokens -> {:.1} kg CO2e",
        usage.prompt_tokens, usage.completion_tokens, est.total_tokens, est.kg_co2e
    )
}
