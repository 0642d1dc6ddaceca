//! Layered settings: command-line flags and environment variables first,
//! then a TOML config file, then built-in defaults.
//!
//! Every layer is a [`ConfigLayer`] with all fields optional; [`ConfigLayer::or`]
//! fills the gaps of a higher layer from a lower one and
//! [`ConfigLayer::resolve`] applies the defaults.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Duration;
use thiserror::Error;

use crate::bundle::{BundleConfig, DEFAULT_ABORT_THRESHOLD, DEFAULT_INTERVAL_MS};
use crate::emissions::DEFAULT_FACTOR_KG_PER_TOKEN;
use crate::prompt::{PromptError, TemplateSet};
use crate::provider::{RemoteConfig, DEFAULT_MAX_OUTPUT_TOKENS};
use crate::segment::{Abbreviations, DEFAULT_ABBREVIATIONS, DEFAULT_GAP_MS, DEFAULT_MAX_CONTEXT_CHARS};
use crate::server::{DEFAULT_BIND, DEFAULT_CACHE_MAX_AGE};

/// Config file picked up from the working directory when none is given.
pub const DEFAULT_CONFIG_FILE: &str = "huh.toml";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid setting {key}: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

/// One layer of settings. Unknown keys in a config file are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub gap_ms: Option<u64>,
    pub max_context_chars: Option<usize>,
    pub abbreviations: Option<Vec<String>>,
    pub overlap_tolerance_ms: Option<u64>,
    pub interval_ms: Option<u64>,
    pub abort_threshold: Option<f64>,
    pub max_output_tokens: Option<u32>,
    pub temperature: Option<f32>,
    pub in_flight: Option<usize>,
    pub request_timeout_secs: Option<u64>,
    pub api_base_url: Option<String>,
    pub model: Option<String>,
    pub bind: Option<String>,
    pub cache_max_age: Option<u64>,
    pub templates_dir: Option<PathBuf>,
    pub factor_kg_per_token: Option<f64>,
}

macro_rules! or_fields {
    ($hi:ident, $lo:ident; $($f:ident),*) => {
        ConfigLayer { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl ConfigLayer {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    /// Load `path` if given (it must exist), else [`DEFAULT_CONFIG_FILE`]
    /// if present, else an empty layer.
    pub fn discover(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            Some(p) => Self::load(p),
            None if Path::new(DEFAULT_CONFIG_FILE).is_file() => Self::load(Path::new(DEFAULT_CONFIG_FILE)),
            None => Ok(Self::default()),
        }
    }

    /// Fields of `self` win; missing ones come from `lower`.
    pub fn or(self, lower: ConfigLayer) -> ConfigLayer {
        let hi = self;
        let lo = lower;
        or_fields!(hi, lo; gap_ms, max_context_chars, abbreviations, overlap_tolerance_ms,
            interval_ms, abort_threshold, max_output_tokens, temperature, in_flight,
            request_timeout_secs, api_base_url, model, bind, cache_max_age, templates_dir,
            factor_kg_per_token)
    }

    pub fn resolve(self) -> Result<Settings, ConfigError> {
        let remote = RemoteConfig::default();
        let s = Settings {
            gap_ms: self.gap_ms.unwrap_or(DEFAULT_GAP_MS),
            max_context_chars: self.max_context_chars.unwrap_or(DEFAULT_MAX_CONTEXT_CHARS),
            abbreviations: self
                .abbreviations
                .unwrap_or_else(|| DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect()),
            overlap_tolerance_ms: self.overlap_tolerance_ms.unwrap_or(0),
            interval_ms: self.interval_ms.unwrap_or(DEFAULT_INTERVAL_MS),
            abort_threshold: self.abort_threshold.unwrap_or(DEFAULT_ABORT_THRESHOLD),
            max_output_tokens: self.max_output_tokens.unwrap_or(DEFAULT_MAX_OUTPUT_TOKENS),
            temperature: self.temperature.unwrap_or(0.0),
            in_flight: self.in_flight,
            request_timeout: self.request_timeout_secs.map_or(remote.timeout, Duration::from_secs),
            api_base_url: self.api_base_url.unwrap_or(remote.base_url),
            model: self.model.unwrap_or(remote.model),
            bind: self.bind.unwrap_or_else(|| DEFAULT_BIND.to_string()),
            cache_max_age: self.cache_max_age.unwrap_or(DEFAULT_CACHE_MAX_AGE),
            templates_dir: self.templates_dir,
            factor_kg_per_token: self.factor_kg_per_token.unwrap_or(DEFAULT_FACTOR_KG_PER_TOKEN),
        };
        s.validate()?;
        Ok(s)
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub gap_ms: u64,
    pub max_context_chars: usize,
    pub abbreviations: Vec<String>,
    pub overlap_tolerance_ms: u64,
    pub interval_ms: u64,
    pub abort_threshold: f64,
    pub max_output_tokens: u32,
    pub temperature: f32,
    /// `None` defers to the provider's own cap.
    pub in_flight: Option<usize>,
    pub request_timeout: Duration,
    pub api_base_url: String,
    pub model: String,
    pub bind: String,
    pub cache_max_age: u64,
    pub templates_dir: Option<PathBuf>,
    pub factor_kg_per_token: f64,
}

impl Default for Settings {
    fn default() -> Self {
        ConfigLayer::default().resolve().expect("defaults are valid")
    }
}

impl Settings {
    fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key, reason: &str| Err(ConfigError::Invalid { key, reason: reason.into() });
        if self.interval_ms == 0 {
            return invalid("interval_ms", "must be positive");
        }
        if self.max_context_chars == 0 {
            return invalid("max_context_chars", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.abort_threshold) {
            return invalid("abort_threshold", "must lie in [0, 1]");
        }
        if self.in_flight == Some(0) {
            return invalid("in_flight", "must be positive");
        }
        if !(self.factor_kg_per_token > 0.0 && self.factor_kg_per_token.is_finite()) {
            return invalid("factor_kg_per_token", "must be positive");
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return invalid("temperature", "must lie in [0, 2]");
        }
        Ok(())
    }

    pub fn abbreviations(&self) -> Abbreviations {
        Abbreviations::new(&self.abbreviations)
    }

    /// Templates from `templates_dir`, falling back to the built-in ones.
    pub fn templates(&self) -> Result<TemplateSet, ConfigError> {
        Ok(match &self.templates_dir {
            Some(dir) => TemplateSet::load_dir(dir)?,
            None => TemplateSet::default(),
        })
    }

    pub fn bundle_config(&self) -> Result<BundleConfig, ConfigError> {
        Ok(BundleConfig {
            interval_ms: self.interval_ms,
            max_context_chars: self.max_context_chars,
            abbreviations: self.abbreviations(),
            templates: self.templates()?,
            abort_threshold: self.abort_threshold,
            max_output_tokens: self.max_output_tokens,
            temperature: self.temperature,
            max_in_flight: self.in_flight,
            ..BundleConfig::default()
        })
    }

    pub fn remote_config(&self, api_key: Option<String>) -> RemoteConfig {
        RemoteConfig {
            base_url: self.api_base_url.clone(),
            model: self.model.clone(),
            api_key,
            timeout: self.request_timeout,
            in_flight: self.in_flight.unwrap_or(RemoteConfig::default().in_flight),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let s = Settings::default();
        assert_eq!(s.gap_ms, 1200);
        assert_eq!(s.interval_ms, 5000);
        assert_eq!(s.max_context_chars, 12_000);
        assert_eq!(s.bind, "127.0.0.1:8080");
        assert_eq!(s.cache_max_age, 86_400);
        assert_eq!(s.factor_kg_per_token, DEFAULT_FACTOR_KG_PER_TOKEN);
        assert!(s.abbreviations.iter().any(|a| a == "Dr."));
    }

    #[test]
    fn precedence() {
        let file = ConfigLayer::from_toml("interval_ms = 2000\ngap_ms = 900\nmodel = \"file-model\"\n", Path::new("t.toml")).unwrap();
        let cli = ConfigLayer { interval_ms: Some(3000), ..Default::default() };
        let s = cli.or(file).resolve().unwrap();
        assert_eq!(s.interval_ms, 3000);
        assert_eq!(s.gap_ms, 900);
        assert_eq!(s.model, "file-model");
        assert_eq!(s.max_context_chars, DEFAULT_MAX_CONTEXT_CHARS);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ConfigLayer::from_toml("interval = 5\n", Path::new("t.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
    }

    #[test]
    fn invalid_values_rejected() {
        for layer in [
            ConfigLayer { interval_ms: Some(0), ..Default::default() },
            ConfigLayer { abort_threshold: Some(1.5), ..Default::default() },
            ConfigLayer { in_flight: Some(0), ..Default::default() },
            ConfigLayer { factor_kg_per_token: Some(0.0), ..Default::default() },
        ] {
            assert!(matches!(layer.resolve(), Err(ConfigError::Invalid { .. })));
        }
    }

    #[test]
    fn explicit_missing_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            ConfigLayer::discover(Some(&dir.path().join("nope.toml"))),
            Err(ConfigError::Io { .. })
        ));
    }
}
