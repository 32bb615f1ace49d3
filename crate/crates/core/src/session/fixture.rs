use serde::{Deserialize, Serialize};

use super::engine::{Engine, TurnFailure};
use super::record::Record;
use super::state::SessionState;
use crate::llm::ReplayScript;

/// A scripted session: what the user types and what the backend answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionFixture {
    pub user_name: String,
    pub messages: Vec<String>,
    pub script: ReplayScript,
}

#[derive(Debug, Clone)]
pub struct PlayedSession {
    pub records: Vec<Record>,
    pub state: SessionState,
}

impl SessionFixture {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let fixture: SessionFixture = serde_json::from_str(text).map_err(|e| format!("session fixture: {e}"))?;
        ReplayScript::from_json(&serde_json::to_string(&fixture.script).expect("script serializes"))?;
        Ok(fixture)
    }

    /// Opens a session and sends every message. The engine must be backed by this fixture's script.
    pub fn play(&self, engine: &Engine) -> Result<PlayedSession, TurnFailure> {
        let opened = engine.open_session(&self.user_name)?;
        let mut records = opened.records;
        let mut state = opened.state;
        for message in &self.messages {
            let outcome = engine.process_user_turn(&state, message)?;
            records.extend(outcome.records);
            state = outcome.state;
        }
        Ok(PlayedSession { records, state })
    }
}
