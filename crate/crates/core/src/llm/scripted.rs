use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use std::sync::{Mutex, PoisonError};

use super::{BackendError, ChatBackend, ChatRequest};
use crate::prompt::PromptKind;

pub const REPLAY_SCRIPT_VERSION: &str = "replay-script/1";

/// Canned replies keyed by prompt digest, or by (turn, purpose) for hand-written fixtures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayScript {
    pub version: String,
    pub entries: Vec<ScriptEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<PromptKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    /// Per-section digests of the prompt that produced this reply.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sections: BTreeMap<String, String>,
    pub reply: String,
}

impl Default for ReplayScript {
    fn default() -> Self {
        Self { version: REPLAY_SCRIPT_VERSION.to_string(), entries: Vec::new() }
    }
}

impl ReplayScript {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let script: ReplayScript = serde_json::from_str(text).map_err(|e| format!("replay script: {e}"))?;
        if script.version != REPLAY_SCRIPT_VERSION {
            return Err(format!("unsupported replay script version `{}`", script.version));
        }
        Ok(script)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("script serializes")
    }

    pub fn push_turn(&mut self, turn: usize, purpose: PromptKind, reply: impl Into<String>) {
        self.entries.push(ScriptEntry {
            turn: Some(turn),
            purpose: Some(purpose),
            digest: None,
            sections: BTreeMap::new(),
            reply: reply.into(),
        });
    }

    /// Drops every entry at or after `turn`.
    pub fn truncated(&self, turn: usize) -> Self {
        let entries = self.entries.iter().filter(|e| e.turn.is_none_or(|t| t < turn)).cloned().collect();
        Self { version: self.version.clone(), entries }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ScriptedMiss {
    pub purpose: PromptKind,
    pub turn: usize,
    pub digest: String,
    /// Sections whose digests differ from the closest recorded prompt.
    pub changed_sections: Vec<String>,
}

impl fmt::Display for ScriptedMiss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "scripted miss: no reply for {:?} prompt at turn {} (digest {})",
            self.purpose, self.turn, self.digest
        )?;
        if !self.changed_sections.is_empty() {
            write!(f, "; changed sections: {}", self.changed_sections.join(", "))?;
        }
        Ok(())
    }
}

/// Backend whose replies are fully determined by a script.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    script: ReplayScript,
}

impl ScriptedBackend {
    pub fn new(script: ReplayScript) -> Self {
        Self { script }
    }

    fn closest_changed_sections(&self, request: &ChatRequest) -> Vec<String> {
        let recorded = self.script.entries.iter().filter(|e| !e.sections.is_empty());
        let same_slot = recorded.clone().find(|e| e.turn == Some(request.turn) && e.purpose == Some(request.purpose));
        let best = same_slot.or_else(|| {
            recorded.max_by_key(|e| e.sections.iter().filter(|(k, v)| request.sections.get(*k) == Some(*v)).count())
        });
        let Some(best) = best else {
            return Vec::new();
        };
        let mut changed: Vec<String> = request
            .sections
            .iter()
            .filter(|(k, v)| best.sections.get(*k) != Some(*v))
            .map(|(k, _)| k.clone())
            .collect();
        changed.extend(best.sections.keys().filter(|k| !request.sections.contains_key(*k)).cloned());
        changed
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let by_digest = self.script.entries.iter().find(|e| e.digest.as_deref() == Some(request.digest.as_str()));
        let by_slot = || {
            self.script
                .entries
                .iter()
                .find(|e| e.digest.is_none() && e.turn == Some(request.turn) && e.purpose == Some(request.purpose))
        };
        match by_digest.or_else(by_slot) {
            Some(entry) => Ok(entry.reply.clone()),
            None => Err(BackendError::ScriptedMiss(ScriptedMiss {
                purpose: request.purpose,
                turn: request.turn,
                digest: request.digest.clone(),
                changed_sections: self.closest_changed_sections(request),
            })),
        }
    }
}

/// Wraps a backend and records every exchange as a digest-keyed script entry.
pub struct RecordingBackend<B> {
    inner: B,
    recorded: Mutex<Vec<ScriptEntry>>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self { inner, recorded: Mutex::new(Vec::new()) }
    }

    pub fn script(&self) -> ReplayScript {
        ReplayScript {
            version: REPLAY_SCRIPT_VERSION.to_string(),
            entries: self.recorded.lock().unwrap_or_else(PoisonError::into_inner).clone(),
        }
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let reply = self.inner.complete(request)?;
        self.recorded.lock().unwrap_or_else(PoisonError::into_inner).push(ScriptEntry {
            turn: Some(request.turn),
            purpose: Some(request.purpose),
            digest: Some(request.digest.clone()),
            sections: request.sections.clone(),
            reply: reply.clone(),
        });
        Ok(reply)
    }
}
