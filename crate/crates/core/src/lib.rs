//! Pre-generated, cached explanations for lecture videos.
//!
//! The pipeline turns a timestamped transcript into two levels of
//! explanation for every fixed-width time slot, persists them as a bundle,
//! and serves them read-only over HTTP so that no model inference happens
//! while viewers watch.
//!
//! ```text
//! transcript ──► punctuate ──► segment ──► plan slots ──► provider ──► bundle
//!                                                                       │
//!                                         lookup / export / serve  ◄────┘
//! ```

pub mod bundle;
pub mod config;
pub mod emissions;
pub mod fixture;
pub mod prompt;
pub mod provider;
pub mod segment;
pub mod server;
pub mod transcript;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// Explanation depth: level 1 explains the last sentence, level 2 the last
/// two sentences in simpler language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    One,
    Two,
}

impl Level {
    pub const ALL: [Level; 2] = [Level::One, Level::Two];

    pub fn as_u8(self) -> u8 {
        match self {
            Level::One => 1,
            Level::Two => 2,
        }
    }

    /// Number of target sentences this level asks for.
    pub fn target_count(self) -> usize {
        self.as_u8() as usize
    }
}

impl TryFrom<u8> for Level {
    type Error = InvalidLevel;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Level::One),
            2 => Ok(Level::Two),
            other => Err(InvalidLevel(other as i64)),
        }
    }
}

impl TryFrom<i64> for Level {
    type Error = InvalidLevel;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        u8::try_from(v)
            .map_err(|_| InvalidLevel(v))
            .and_then(Level::try_from)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl std::str::FromStr for Level {
    type Err = InvalidLevel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: i64 = s.trim().parse().map_err(|_| InvalidLevel(-1))?;
        Level::try_from(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("explanation level must be 1 or 2, got {0}")]
pub struct InvalidLevel(pub i64);

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Level::try_from(v).map_err(serde::de::Error::custom)
    }
}
