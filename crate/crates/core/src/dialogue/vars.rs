use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the sixteen pieces of information the agent has to elicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableId {
    UserReady,
    Motivation,
    Difficulty,
    Emotion,
    MusicInfo,
    Concept,
    LyricsKeyword,
    LyricsSentence,
    LyricsFlow,
    DiscussionFeedback,
    LyricsFlag,
    Title,
    MusicConcept,
    MusicRecreation,
    MusicOpinion,
    Reflection,
}

impl VariableId {
    pub const ALL: [VariableId; 16] = [
        VariableId::UserReady,
        VariableId::Motivation,
        VariableId::Difficulty,
        VariableId::Emotion,
        VariableId::MusicInfo,
        VariableId::Concept,
        VariableId::LyricsKeyword,
        VariableId::LyricsSentence,
        VariableId::LyricsFlow,
        VariableId::DiscussionFeedback,
        VariableId::LyricsFlag,
        VariableId::Title,
        VariableId::MusicConcept,
        VariableId::MusicRecreation,
        VariableId::MusicOpinion,
        VariableId::Reflection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VariableId::UserReady => "user_ready",
            VariableId::Motivation => "motivation",
            VariableId::Difficulty => "difficulty",
            VariableId::Emotion => "emotion",
            VariableId::MusicInfo => "music_info",
            VariableId::Concept => "concept",
            VariableId::LyricsKeyword => "lyrics_keyword",
            VariableId::LyricsSentence => "lyrics_sentence",
            VariableId::LyricsFlow => "lyrics_flow",
            VariableId::DiscussionFeedback => "discussion_feedback",
            VariableId::LyricsFlag => "lyrics_flag",
            VariableId::Title => "title",
            VariableId::MusicConcept => "music_concept",
            VariableId::MusicRecreation => "music_recreation",
            VariableId::MusicOpinion => "music_opinion",
            VariableId::Reflection => "reflection",
        }
    }

    /// Value shape accepted for this variable.
    pub fn schema(self) -> VariableSchema {
        match self {
            VariableId::LyricsSentence => VariableSchema::Sentences { min: 3 },
            VariableId::LyricsFlag => VariableSchema::LyricsFlag,
            VariableId::MusicRecreation => VariableSchema::MusicRecreation,
            _ => VariableSchema::Text,
        }
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariableId {
    type Err = UnknownVariable;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VariableId::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| UnknownVariable(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown variable `{0}`")]
pub struct UnknownVariable(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableSchema {
    Text,
    /// Free text holding at least `min` sentences.
    Sentences {
        min: usize,
    },
    LyricsFlag,
    MusicRecreation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LyricsFlag {
    pub change_needed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MusicRecreation {
    pub revise_lyrics: bool,
    pub revise_music: bool,
    #[serde(default)]
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VariableValue {
    Text(String),
    LyricsFlag(LyricsFlag),
    MusicRecreation(MusicRecreation),
}

impl VariableValue {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            VariableValue::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Short human-readable form used when a value is quoted back into a prompt.
    pub fn display_text(&self) -> String {
        match self {
            VariableValue::Text(s) => s.clone(),
            VariableValue::LyricsFlag(f) => {
                if f.change_needed {
                    "changes requested".into()
                } else {
                    "no changes needed".into()
                }
            }
            VariableValue::MusicRecreation(r) => {
                format!("revise lyrics: {}, revise music: {}, notes: {}", r.revise_lyrics, r.revise_music, r.notes)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FillStatus {
    Unfilled,
    Filled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VariableEntry {
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<VariableValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filled_at_turn: Option<usize>,
}

impl VariableEntry {
    pub fn status(&self) -> FillStatus {
        if self.value.is_some() {
            FillStatus::Filled
        } else {
            FillStatus::Unfilled
        }
    }
}

/// Fill status and values for all sixteen required variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequiredVariableSet {
    entries: BTreeMap<VariableId, VariableEntry>,
}

impl RequiredVariableSet {
    /// Builds an all-unfilled set. `describe` must cover every variable.
    pub fn unfilled(describe: impl Fn(VariableId) -> String) -> Self {
        let entries = VariableId::ALL
            .into_iter()
            .map(|id| (id, VariableEntry { description: describe(id), value: None, filled_at_turn: None }))
            .collect();
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        VariableId::ALL.iter().all(|id| self.entries.contains_key(id))
    }

    pub fn entry(&self, id: VariableId) -> Option<&VariableEntry> {
        self.entries.get(&id)
    }

    pub fn value(&self, id: VariableId) -> Option<&VariableValue> {
        self.entries.get(&id).and_then(|e| e.value.as_ref())
    }

    pub fn is_filled(&self, id: VariableId) -> bool {
        self.value(id).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VariableId, &VariableEntry)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    pub fn filled_count(&self) -> usize {
        self.entries.values().filter(|e| e.value.is_some()).count()
    }

    /// Stores a value. Empty text is ignored so an absent answer never erases one.
    pub fn fill(&mut self, id: VariableId, value: VariableValue, turn: usize) {
        if matches!(&value, VariableValue::Text(t) if t.trim().is_empty()) {
            return;
        }
        if let Some(entry) = self.entries.get_mut(&id) {
            entry.value = Some(value);
            entry.filled_at_turn = Some(turn);
        }
    }

    pub fn reset(&mut self, id: VariableId) {
        if let Some(entry) = self.entries.get_mut(&id) {
            entry.value = None;
            entry.filled_at_turn = None;
        }
    }

    pub fn lyrics_change_needed(&self) -> Option<bool> {
        match self.value(VariableId::LyricsFlag)? {
            VariableValue::LyricsFlag(f) => Some(f.change_needed),
            _ => None,
        }
    }

    pub fn music_recreation(&self) -> Option<&MusicRecreation> {
        match self.value(VariableId::MusicRecreation)? {
            VariableValue::MusicRecreation(r) => Some(r),
            _ => None,
        }
    }
}
