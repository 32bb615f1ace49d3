#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;
use std::sync::Arc;

use songwell_core::dialogue::{LyricsFlag, MusicRecreation, VariableId, VariableSchema, VariableValue};
use songwell_core::llm::{ChatBackend, ScriptedBackend};
use songwell_core::session::{Engine, EngineParts, SessionFixture};

pub const SESSION_FIXTURES: [&str; 4] = ["full", "revise-lyrics-loop", "revert-to-lyrics", "revert-to-music"];

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn load_session(name: &str) -> SessionFixture {
    let text = std::fs::read_to_string(fixture_path(&format!("sessions/{name}.json"))).expect("fixture exists");
    SessionFixture::from_json(&text).expect("fixture parses")
}

pub fn engine_with(chat: Arc<dyn ChatBackend>) -> Engine {
    Engine::new(EngineParts::shipped(chat)).expect("shipped configuration is valid")
}

pub fn scripted_engine(fixture: &SessionFixture) -> Engine {
    engine_with(Arc::new(ScriptedBackend::new(fixture.script.clone())))
}

/// A schema-valid value for any variable.
pub fn sample_value(id: VariableId) -> VariableValue {
    match id.schema() {
        VariableSchema::Text => VariableValue::Text(format!("value of {id}")),
        VariableSchema::Sentences { .. } => VariableValue::Text("One. Two. Three.".into()),
        VariableSchema::LyricsFlag => VariableValue::LyricsFlag(LyricsFlag { change_needed: false }),
        VariableSchema::MusicRecreation => VariableValue::MusicRecreation(MusicRecreation {
            revise_lyrics: false,
            revise_music: false,
            notes: String::new(),
        }),
    }
}

/// Compares golden text, or rewrites it when UPDATE_GOLDEN is set.
pub fn check_golden(rel: &str, actual: &str) {
    let path = fixture_path(rel);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected =
        std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {rel}; run with UPDATE_GOLDEN=1"));
    assert!(expected == actual, "golden {rel} differs");
}

/// Simulated backend with per-request overrides and a log of every request.
pub struct Hooked<F> {
    hook: F,
    pub log: std::sync::Mutex<Vec<songwell_core::llm::ChatRequest>>,
}

impl<F> Hooked<F>
where
    F: Fn(&songwell_core::llm::ChatRequest) -> Option<Result<String, songwell_core::llm::BackendError>> + Send + Sync,
{
    pub fn new(hook: F) -> Arc<Self> {
        Arc::new(Self { hook, log: std::sync::Mutex::new(Vec::new()) })
    }

    pub fn systems(&self, purpose: songwell_core::prompt::PromptKind) -> Vec<String> {
        self.log.lock().unwrap().iter().filter(|r| r.purpose == purpose).map(|r| r.system.clone()).collect()
    }
}

impl<F> ChatBackend for Hooked<F>
where
    F: Fn(&songwell_core::llm::ChatRequest) -> Option<Result<String, songwell_core::llm::BackendError>> + Send + Sync,
{
    fn complete(&self, request: &songwell_core::llm::ChatRequest) -> Result<String, songwell_core::llm::BackendError> {
        self.log.lock().unwrap().push(request.clone());
        (self.hook)(request).unwrap_or_else(|| songwell_core::llm::SimulatedBackend.complete(request))
    }
}
