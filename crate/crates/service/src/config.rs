use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use songwell_core::llm::{
    ChatBackend, LiveBackend, LiveConfig, LlmGateway, ReplayScript, ScriptedBackend, SimulatedBackend,
};
use songwell_core::prompt::PromptLibrary;
use songwell_core::session::{Engine, EngineParts, SessionFixture};
use songwell_core::viz::MoodStyleTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    /// Canned offline replies; every answer completes a step.
    Simulated,
    /// Replies from a replay script or session fixture (`--script`).
    Scripted,
    /// A chat-completion endpoint configured through `SONGWELL_LLM_*`.
    Live,
}

/// Engine settings shared by every subcommand. Each flag falls back to its environment variable.
#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    #[arg(long, env = "SONGWELL_BACKEND", value_enum, default_value_t = BackendKind::Simulated)]
    pub backend: BackendKind,
    /// Replay script or session fixture for the scripted backend.
    #[arg(long, env = "SONGWELL_SCRIPT")]
    pub script: Option<PathBuf>,
    /// Prompt library TOML replacing the shipped one.
    #[arg(long, env = "SONGWELL_PROMPT_LIBRARY")]
    pub prompt_library: Option<PathBuf>,
    /// Mood style table TOML replacing the shipped one.
    #[arg(long, env = "SONGWELL_MOOD_TABLE")]
    pub mood_table: Option<PathBuf>,
    /// Recent turns kept verbatim in dialogue prompts.
    #[arg(long, env = "SONGWELL_TURN_BUDGET")]
    pub turn_budget: Option<usize>,
}

impl Default for EngineArgs {
    fn default() -> Self {
        Self {
            backend: BackendKind::Simulated,
            script: None,
            prompt_library: None,
            mood_table: None,
            turn_budget: None,
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Reads a replay script, or the script inside a session fixture.
pub fn load_script(path: &Path) -> Result<ReplayScript, String> {
    let text = read(path)?;
    if let Ok(fixture) = SessionFixture::from_json(&text) {
        return Ok(fixture.script);
    }
    ReplayScript::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

impl EngineArgs {
    pub fn chat_backend(&self) -> Result<Arc<dyn ChatBackend>, String> {
        Ok(match self.backend {
            BackendKind::Simulated => Arc::new(SimulatedBackend),
            BackendKind::Scripted => {
                let path = self.script.as_deref().ok_or("the scripted backend needs --script or SONGWELL_SCRIPT")?;
                Arc::new(ScriptedBackend::new(load_script(path)?))
            }
            BackendKind::Live => Arc::new(LiveBackend::new(LiveConfig::from_env()?)),
        })
    }

    pub fn build(&self) -> Result<Engine, String> {
        self.build_with(self.chat_backend()?)
    }

    /// Builds an engine around `chat` with this configuration.
    pub fn build_with(&self, chat: Arc<dyn ChatBackend>) -> Result<Engine, String> {
        let mut parts = EngineParts::shipped(chat.clone());
        if self.backend == BackendKind::Live {
            // Real endpoints get backoff between retries.
            parts.gateway = LlmGateway::new(chat);
        }
        if let Some(path) = &self.prompt_library {
            let library = PromptLibrary::from_toml(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
            parts.library = Arc::new(library);
        }
        if let Some(path) = &self.mood_table {
            let moods = MoodStyleTable::from_toml(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
            parts.moods = Arc::new(moods);
        }
        if let Some(budget) = self.turn_budget {
            parts.config.turn_budget = budget;
        }
        Engine::new(parts).map_err(|e| format!("prompt library: {e}"))
    }
}
