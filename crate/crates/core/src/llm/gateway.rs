use std::sync::Arc;
use std::thread;
use std::time::Duration;

use super::extract::{parse_extraction, ExtractionResult};
use super::sanitize::{parse_option_chips, sanitize_reply};
use super::{BackendError, ChatBackend, ChatRequest, ChatTurn, Speaker};
use crate::dialogue::{TherapyStep, VariableId};
use crate::prompt::{PromptBundle, PromptKind};

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each further attempt.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 2, base_delay: Duration::from_millis(250) }
    }
}

impl RetryPolicy {
    pub fn immediate() -> Self {
        Self { max_retries: 2, base_delay: Duration::ZERO }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("backend failed after {attempts} attempt(s): {source}")]
    Backend {
        attempts: u32,
        #[source]
        source: BackendError,
    },
    #[error("extraction failed: {reason}")]
    ExtractionFailed { reason: String, raw: String },
    #[error("expected a {expected:?} prompt, got {got:?}")]
    WrongKind { expected: PromptKind, got: PromptKind },
}

impl GatewayError {
    pub fn backend(&self) -> Option<&BackendError> {
        match self {
            GatewayError::Backend { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// Case-insensitive phrases that mark a message for human attention.
#[derive(Debug, Clone)]
pub struct CrisisLexicon {
    terms: Vec<String>,
}

impl Default for CrisisLexicon {
    fn default() -> Self {
        Self::new([
            "self-harm",
            "self harm",
            "hurt myself",
            "kill myself",
            "suicide",
            "suicidal",
            "end my life",
            "want to die",
            "emergency help",
        ])
    }
}

impl CrisisLexicon {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { terms: terms.into_iter().map(|t| t.into().to_lowercase()).filter(|t| !t.is_empty()).collect() }
    }

    pub fn matches(&self, text: &str) -> bool {
        let lower = text.to_lowercase();
        self.terms.iter().any(|t| lower.contains(t))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogueReply {
    pub turn: ChatTurn,
    pub crisis_flagged: bool,
    /// The raw reply broke the plain-string rule and was cleaned up.
    pub sanitized: bool,
}

pub struct LlmGateway {
    backend: Arc<dyn ChatBackend>,
    retry: RetryPolicy,
    crisis: CrisisLexicon,
    temperature: Option<f64>,
}

impl LlmGateway {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Self { backend, retry: RetryPolicy::default(), crisis: CrisisLexicon::default(), temperature: None }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_crisis_lexicon(mut self, crisis: CrisisLexicon) -> Self {
        self.crisis = crisis;
        self
    }

    pub fn with_temperature(mut self, temperature: Option<f64>) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn crisis_lexicon(&self) -> &CrisisLexicon {
        &self.crisis
    }

    /// Sends a bundle, retrying transport failures only.
    pub fn call(&self, bundle: &PromptBundle, turn: usize) -> Result<String, GatewayError> {
        let request = ChatRequest::from_bundle(bundle, turn, self.temperature);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.backend.complete(&request) {
                Ok(reply) => return Ok(reply),
                Err(err) if err.is_retryable() && attempts <= self.retry.max_retries => {
                    let delay = self.retry.base_delay * 2u32.pow(attempts - 1);
                    tracing::warn!(%err, attempts, ?delay, "retrying backend call");
                    if !delay.is_zero() {
                        thread::sleep(delay);
                    }
                }
                Err(source) => return Err(GatewayError::Backend { attempts, source }),
            }
        }
    }

    /// Gets the next agent turn for a dialogue bundle.
    pub fn complete_dialogue(&self, bundle: &PromptBundle, index: usize) -> Result<DialogueReply, GatewayError> {
        if bundle.kind != PromptKind::Dialogue {
            return Err(GatewayError::WrongKind { expected: PromptKind::Dialogue, got: bundle.kind });
        }
        let raw = self.call(bundle, index)?;
        let clean = sanitize_reply(&raw);
        if clean.changed {
            tracing::info!(turn = index, "reply violated the plain-string rule; sanitized");
        }
        let state_at = bundle.state_ref.clone().expect("dialogue bundles carry their step");
        let option_chips = parse_option_chips(&clean.text);
        let crisis_flagged = self.crisis.matches(&clean.text);
        Ok(DialogueReply {
            turn: ChatTurn { index, speaker: Speaker::Agent, text: clean.text, option_chips, state_at },
            crisis_flagged,
            sanitized: clean.changed,
        })
    }

    /// Runs an extraction bundle. Only the bundle's requested keys that belong to `step`
    /// can come back.
    pub fn extract_variables(
        &self,
        bundle: &PromptBundle,
        step: &TherapyStep,
        turn: usize,
    ) -> Result<ExtractionResult, GatewayError> {
        if bundle.kind != PromptKind::Extraction {
            return Err(GatewayError::WrongKind { expected: PromptKind::Extraction, got: bundle.kind });
        }
        let requested: Vec<VariableId> =
            bundle.expected_keys.iter().copied().filter(|v| step.required.contains(v)).collect();
        let raw = self.call(bundle, turn)?;
        parse_extraction(&raw, &requested).map_err(|reason| GatewayError::ExtractionFailed { reason, raw })
    }

    /// Raw text from a generation bundle (lyricist, composer).
    pub fn generate(&self, bundle: &PromptBundle, turn: usize) -> Result<String, GatewayError> {
        self.call(bundle, turn)
    }
}
