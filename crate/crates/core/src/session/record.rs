use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dialogue::{TherapyState, TransitionDecision, VariableId, VariableValue};
use crate::llm::{ChatTurn, RejectedValue, StepRef};
use crate::lyrics::LyricsDocument;
use crate::music::{MusicComponents, SongArtifact, StylePrompt};
use crate::VizScript;

pub const TRANSCRIPT_VERSION: &str = "transcript/1";

/// Configuration fingerprints pinned at session start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionHeader {
    pub format: String,
    pub user_name: String,
    pub registry_checksum: String,
    pub prompts_checksum: String,
    pub moods_checksum: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TurnRecord {
    /// Present only on the opening record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header: Option<SessionHeader>,
    pub turn: ChatTurn,
    /// Digest of the prompt that produced an agent turn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_digest: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub crisis_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum ExtractionOutcome {
    #[serde(rename_all = "camelCase")]
    Applied {
        values: BTreeMap<VariableId, VariableValue>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        dropped_keys: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        rejected: Vec<RejectedValue>,
        raw: String,
    },
    #[serde(rename_all = "camelCase")]
    Failed {
        error: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        raw: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtractionRecord {
    /// Index of the user turn the extraction ran for.
    pub turn: usize,
    pub step: StepRef,
    pub prompt_digest: String,
    #[serde(flatten)]
    pub outcome: ExtractionOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ActionRecord {
    GenerateLyrics {
        lyrics: LyricsDocument,
    },
    #[serde(rename_all = "camelCase")]
    GenerateStylePrompt {
        components: MusicComponents,
        style: StylePrompt,
    },
    #[serde(rename_all = "camelCase")]
    GenerateMusic {
        song: SongArtifact,
        viz_script: VizScript,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        warnings: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TransitionRecord {
    /// History length when the decision was taken.
    pub turn: usize,
    pub decision: TransitionDecision,
    pub from: StepRef,
    pub to: StepRef,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reset: Vec<VariableId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision_of: Option<TherapyState>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<ActionRecord>,
}

/// One line of a session transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "camelCase")]
pub enum Record {
    Turn(TurnRecord),
    Extraction(ExtractionRecord),
    Transition(TransitionRecord),
}

impl Record {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("transcript line {line}: {message}")]
pub struct TranscriptParseError {
    pub line: usize,
    pub message: String,
}

/// One record per line, newline-terminated.
pub fn write_transcript(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

/// Parses a transcript; blank lines are skipped and errors carry a 1-based line number.
pub fn parse_transcript(text: &str) -> Result<Vec<Record>, TranscriptParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| Record::from_line(l).map_err(|e| TranscriptParseError { line: i + 1, message: e.to_string() }))
        .collect()
}
