//! Chat-completion backends and the gateway that turns their replies into turns and variables.

mod extract;
mod gateway;
mod live;
mod sanitize;
mod scripted;
mod simulated;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dialogue::{StepId, TherapyState, VariableId};
use crate::prompt::{PromptBundle, PromptKind};

pub use extract::{parse_extraction, ExtractionResult, RejectedValue};
pub use gateway::{CrisisLexicon, DialogueReply, GatewayError, LlmGateway, RetryPolicy};
pub use live::{LiveBackend, LiveConfig};
pub use sanitize::{parse_option_chips, sanitize_reply, Sanitized};
pub use scripted::{RecordingBackend, ReplayScript, ScriptEntry, ScriptedBackend, ScriptedMiss, REPLAY_SCRIPT_VERSION};
pub use simulated::SimulatedBackend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Speaker {
    User,
    Agent,
}

impl Speaker {
    pub fn label(self) -> &'static str {
        match self {
            Speaker::User => "User",
            Speaker::Agent => "Agent",
        }
    }
}

/// A (state, step) position in the dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepRef {
    pub state: TherapyState,
    pub step: StepId,
}

impl fmt::Display for StepRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.state, self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChatTurn {
    pub index: usize,
    pub speaker: Speaker,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub option_chips: Vec<String>,
    pub state_at: StepRef,
}

/// One call to a chat backend. `turn` is the history index the call is made for.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub purpose: PromptKind,
    pub turn: usize,
    pub system: String,
    pub digest: String,
    pub sections: BTreeMap<String, String>,
    /// Variables an extraction request asks for; empty for other purposes.
    pub expected_keys: Vec<VariableId>,
    pub temperature: Option<f64>,
}

impl ChatRequest {
    pub fn from_bundle(bundle: &PromptBundle, turn: usize, temperature: Option<f64>) -> Self {
        Self {
            purpose: bundle.kind,
            turn,
            system: bundle.rendered_text.clone(),
            digest: bundle.digest(),
            sections: bundle.section_digests(),
            expected_keys: bundle.expected_keys.clone(),
            temperature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend timed out")]
    Timeout,
    #[error("backend rejected the request: {0}")]
    Rejected(String),
    #[error(transparent)]
    ScriptedMiss(#[from] ScriptedMiss),
}

impl BackendError {
    /// Only transport-level failures are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Transport(_) | BackendError::Timeout)
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }
}

/// Plain `Speaker: text` lines, oldest first.
pub fn render_transcript(history: &[ChatTurn]) -> String {
    let mut out = String::new();
    for (i, turn) in history.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(turn.speaker.label());
        out.push_str(": ");
        out.push_str(&turn.text);
    }
    out
}
