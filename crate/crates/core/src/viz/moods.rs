use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub const DEFAULT_MOOD_TABLE: &str = include_str!("../../config/moods.toml");
pub const MOOD_TABLE_VERSION: &str = "moods/1";

static HEX_COLOR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^#[0-9A-Fa-f]{6}$").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoodStyle {
    pub color: String,
    pub font_style: String,
}

#[derive(Debug, thiserror::Error)]
pub enum MoodTableError {
    #[error("mood table does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported mood table version `{0}`")]
    Version(String),
    #[error("invalid mood table: {0}")]
    Invalid(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MoodTableDoc {
    version: String,
    fallback: String,
    moods: BTreeMap<String, MoodStyle>,
}

/// Color and font style per mood class.
#[derive(Debug, Clone)]
pub struct MoodStyleTable {
    moods: BTreeMap<String, MoodStyle>,
    fallback: String,
    checksum: String,
}

impl MoodStyleTable {
    pub fn shipped() -> Self {
        Self::from_toml(DEFAULT_MOOD_TABLE).expect("shipped mood table is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, MoodTableError> {
        let doc: MoodTableDoc = toml::from_str(text)?;
        if doc.version != MOOD_TABLE_VERSION {
            return Err(MoodTableError::Version(doc.version));
        }
        if doc.moods.is_empty() {
            return Err(MoodTableError::Invalid("no moods".into()));
        }
        for (name, style) in &doc.moods {
            if name.trim().is_empty() || name.to_lowercase() != *name {
                return Err(MoodTableError::Invalid(format!("mood name `{name}` must be lowercase and non-empty")));
            }
            if !HEX_COLOR.is_match(&style.color) {
                return Err(MoodTableError::Invalid(format!("mood `{name}` color `{}` is not #RRGGBB", style.color)));
            }
            if style.font_style.trim().is_empty() {
                return Err(MoodTableError::Invalid(format!("mood `{name}` has an empty font style")));
            }
        }
        if !doc.moods.contains_key(&doc.fallback) {
            return Err(MoodTableError::Invalid(format!("fallback mood `{}` is not in the table", doc.fallback)));
        }
        Ok(Self { moods: doc.moods, fallback: doc.fallback, checksum: crate::checksum(text) })
    }

    pub fn get(&self, mood: &str) -> Option<&MoodStyle> {
        self.moods.get(mood)
    }

    pub fn fallback(&self) -> &str {
        &self.fallback
    }

    pub fn moods(&self) -> impl Iterator<Item = (&str, &MoodStyle)> {
        self.moods.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }
}
