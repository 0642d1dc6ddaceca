//! Prompt templates for both explanation levels and for punctuation
//! restoration.

use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

use crate::segment::ContextWindow;
use crate::Level;

pub const PLACEHOLDER: &str = "{context}";

pub const DEFAULT_LEVEL1: &str = "Use a third person singular perspective, referring to the speaker. Take the last sentence of this text which ends with a full stop, and explain it in your own words: {context}";

pub const DEFAULT_LEVEL2: &str = "Use a third person singular perspective, referring to the speaker. Consider the last two sentences of this text. Explain them in your own words, taking a broader perspective, and use simple language: {context}";

pub const DEFAULT_PUNCTUATION: &str = "Add missing punctuation and sentence casing to this transcript text. Do not change, add, or remove any words: {context}";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("template {name} must contain exactly one {PLACEHOLDER} placeholder, found {found}")]
    MissingTemplate { name: String, found: usize },
    #[error("cannot read template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateKind {
    Level(Level),
    Punctuation,
}

impl TemplateKind {
    pub fn file_name(self) -> &'static str {
        match self {
            TemplateKind::Level(Level::One) => "level1.txt",
            TemplateKind::Level(Level::Two) => "level2.txt",
            TemplateKind::Punctuation => "punctuation.txt",
        }
    }
}

/// Instruction text with a single `{context}` slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub kind: TemplateKind,
    instruction_text: String,
}

impl PromptTemplate {
    pub fn new(kind: TemplateKind, instruction_text: impl Into<String>) -> Result<Self, PromptError> {
        let instruction_text = instruction_text.into();
        let found = instruction_text.matches(PLACEHOLDER).count();
        if found != 1 {
            return Err(PromptError::MissingTemplate {
                name: kind.file_name().to_string(),
                found,
            });
        }
        Ok(Self {
            kind,
            instruction_text,
        })
    }

    pub fn instruction_text(&self) -> &str {
        &self.instruction_text
    }

    pub fn render(&self, context: &str) -> String {
        self.instruction_text.replacen(PLACEHOLDER, context, 1)
    }

    /// First 16 hex digits of the SHA-256 of the instruction text.
    pub fn hash(&self) -> String {
        Sha256::digest(self.instruction_text.as_bytes())
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub level1: PromptTemplate,
    pub level2: PromptTemplate,
    pub punctuation: PromptTemplate,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self {
            level1: PromptTemplate::new(TemplateKind::Level(Level::One), DEFAULT_LEVEL1)
                .expect("default level-1 template is valid"),
            level2: PromptTemplate::new(TemplateKind::Level(Level::Two), DEFAULT_LEVEL2)
                .expect("default level-2 template is valid"),
            punctuation: PromptTemplate::new(TemplateKind::Punctuation, DEFAULT_PUNCTUATION)
                .expect("default punctuation template is valid"),
        }
    }
}

impl TemplateSet {
    /// Load `level1.txt`, `level2.txt` and `punctuation.txt` from `dir`.
    /// Missing files keep their defaults; one trailing line break is dropped.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut set = Self::default();
        for kind in [
            TemplateKind::Level(Level::One),
            TemplateKind::Level(Level::Two),
            TemplateKind::Punctuation,
        ] {
            let path = dir.join(kind.file_name());
            let text = match std::fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
                Err(source) => {
                    return Err(PromptError::Io {
                        path: path.display().to_string(),
                        source,
                    })
                }
            };
            let text = text
                .strip_suffix('\n')
                .map(|t| t.strip_suffix('\r').unwrap_or(t))
                .unwrap_or(&text);
            let template = PromptTemplate::new(kind, text)?;
            match kind {
                TemplateKind::Level(Level::One) => set.level1 = template,
                TemplateKind::Level(Level::Two) => set.level2 = template,
                TemplateKind::Punctuation => set.punctuation = template,
            }
        }
        Ok(set)
    }

    pub fn for_level(&self, level: Level) -> &PromptTemplate {
        match level {
            Level::One => &self.level1,
            Level::Two => &self.level2,
        }
    }
}

/// The exact prompt sent to the provider for `window`.
pub fn build_prompt(window: &ContextWindow, templates: &TemplateSet) -> String {
    templates.for_level(window.level).render(&window.context_text)
}
