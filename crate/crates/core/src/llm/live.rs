use std::env;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{BackendError, ChatBackend, ChatRequest};

/// Connection settings for a chat-completion HTTP endpoint.
#[derive(Clone)]
pub struct LiveConfig {
    /// Base URL; `/chat/completions` is appended.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub temperature: Option<f64>,
    pub timeout: Duration,
}

impl std::fmt::Debug for LiveConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveConfig")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("temperature", &self.temperature)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl LiveConfig {
    /// Reads `SONGWELL_LLM_ENDPOINT`, `SONGWELL_LLM_MODEL`, `SONGWELL_LLM_API_KEY`,
    /// `SONGWELL_LLM_TEMPERATURE` and `SONGWELL_LLM_TIMEOUT_SECS`.
    pub fn from_env() -> Result<Self, String> {
        let endpoint = env::var("SONGWELL_LLM_ENDPOINT").map_err(|_| "SONGWELL_LLM_ENDPOINT is not set".to_string())?;
        let model = env::var("SONGWELL_LLM_MODEL").map_err(|_| "SONGWELL_LLM_MODEL is not set".to_string())?;
        let temperature = match env::var("SONGWELL_LLM_TEMPERATURE") {
            Ok(t) => Some(t.parse::<f64>().map_err(|e| format!("SONGWELL_LLM_TEMPERATURE: {e}"))?),
            Err(_) => None,
        };
        let timeout = match env::var("SONGWELL_LLM_TIMEOUT_SECS") {
            Ok(t) => Duration::from_secs(t.parse::<u64>().map_err(|e| format!("SONGWELL_LLM_TIMEOUT_SECS: {e}"))?),
            Err(_) => Duration::from_secs(60),
        };
        Ok(Self { endpoint, model, api_key: env::var("SONGWELL_LLM_API_KEY").ok(), temperature, timeout })
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

pub struct LiveBackend {
    config: LiveConfig,
    agent: ureq::Agent,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'))
    }
}

impl ChatBackend for LiveBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let mut body = json!({
            "model": self.config.model,
            "messages": [{ "role": "system", "content": request.system }],
        });
        if let Some(t) = request.temperature.or(self.config.temperature) {
            body["temperature"] = json!(t);
        }
        let mut req = self.agent.post(&self.url()).header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let payload = body.to_string();
        let mut resp = req.send(payload.as_bytes()).map_err(|e| match e {
            ureq::Error::Timeout(_) => BackendError::Timeout,
            other => BackendError::Transport(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(BackendError::Transport(format!("HTTP {status}")));
        }
        if status >= 400 {
            let detail = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(BackendError::Rejected(format!(
                "HTTP {status}: {}",
                detail.chars().take(200).collect::<String>()
            )));
        }
        let completion: Completion =
            resp.body_mut().read_json().map_err(|e| BackendError::Rejected(format!("malformed completion: {e}")))?;
        completion
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Rejected("completion has no content".into()))
    }
}
