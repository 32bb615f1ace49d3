use std::sync::LazyLock;

use regex::Regex;
use serde_json::{json, Map, Value};

use super::{BackendError, ChatBackend, ChatRequest};
use crate::dialogue::{VariableId, VariableSchema};
use crate::prompt::PromptKind;

static CURRENT_STEP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"Current step: ([a-z_]+)\.").unwrap());

const LYRICS: &str = "[Verse]\nGrey rain on my window\nI hold a quiet light\n[Chorus]\nSlowly I rise again\nmorning will find me\n[Bridge]\nI am still here";

/// Offline backend that answers every prompt with plausible canned content: extraction
/// fills every requested variable, so each user turn completes a step.
#[derive(Debug, Clone, Default)]
pub struct SimulatedBackend;

impl SimulatedBackend {
    fn extraction(keys: &[VariableId]) -> String {
        let mut doc = Map::new();
        for key in keys {
            let value = match key.schema() {
                VariableSchema::Text => {
                    Value::String(format!("{} as shared by the user", key.as_str().replace('_', " ")))
                }
                VariableSchema::Sentences { .. } => {
                    Value::String("Rain taps on my window. I hold a small light. I am still here.".into())
                }
                VariableSchema::LyricsFlag => json!({ "changeNeeded": false }),
                VariableSchema::MusicRecreation => json!({ "reviseLyrics": false, "reviseMusic": false, "notes": "" }),
            };
            doc.insert(key.as_str().to_string(), value);
        }
        Value::Object(doc).to_string()
    }

    fn dialogue(system: &str) -> String {
        let step = CURRENT_STEP.captures(system).map(|c| c[1].replace('_', " ")).unwrap_or_default();
        format!("Thank you for sharing that with me. Let's continue with {step}. How does that feel? For example, 'calm', 'bright' or 'warm'.")
    }
}

impl ChatBackend for SimulatedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        Ok(match request.purpose {
            PromptKind::Dialogue => Self::dialogue(&request.system),
            PromptKind::Extraction => Self::extraction(&request.expected_keys),
            PromptKind::Lyricist => LYRICS.to_string(),
            PromptKind::Composer => json!({
                "genre": "acoustic pop",
                "mood": "hopeful",
                "tempo": "slow",
                "instrumentation": ["piano", "strings"]
            })
            .to_string(),
        })
    }
}
