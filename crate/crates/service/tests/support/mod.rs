#![allow(dead_code)]

use std::sync::Arc;

use songwell_core::llm::{BackendError, ChatBackend, ChatRequest, ScriptedBackend, SimulatedBackend};
use songwell_core::session::{Engine, EngineParts, Record, SessionFixture};
use songwell_service::{Store, StoreError};

pub const SESSION_FIXTURES: [(&str, &str); 4] = [
    ("full", include_str!("../../../core/fixtures/sessions/full.json")),
    ("revise-lyrics-loop", include_str!("../../../core/fixtures/sessions/revise-lyrics-loop.json")),
    ("revert-to-lyrics", include_str!("../../../core/fixtures/sessions/revert-to-lyrics.json")),
    ("revert-to-music", include_str!("../../../core/fixtures/sessions/revert-to-music.json")),
];

pub fn fixture(name: &str) -> SessionFixture {
    let (_, text) = SESSION_FIXTURES.iter().find(|(n, _)| *n == name).expect("known fixture");
    SessionFixture::from_json(text).expect("fixture parses")
}

pub fn engine_with(chat: Arc<dyn ChatBackend>) -> Arc<Engine> {
    Arc::new(Engine::new(EngineParts::shipped(chat)).expect("shipped configuration is valid"))
}

pub fn scripted(fixture: &SessionFixture) -> Arc<Engine> {
    engine_with(Arc::new(ScriptedBackend::new(fixture.script.clone())))
}

type Hook = dyn Fn(&ChatRequest) -> Option<Result<String, BackendError>> + Send + Sync;

/// Simulated backend whose replies can be overridden per request.
pub struct Hooked(Box<Hook>);

impl Hooked {
    pub fn new(
        hook: impl Fn(&ChatRequest) -> Option<Result<String, BackendError>> + Send + Sync + 'static,
    ) -> Arc<Self> {
        Arc::new(Self(Box::new(hook)))
    }
}

impl ChatBackend for Hooked {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        (self.0)(request).unwrap_or_else(|| SimulatedBackend.complete(request))
    }
}

type AppendHook = dyn Fn(&str, &[Record]) -> Option<Result<(), StoreError>> + Send + Sync;

/// A store whose appends can be intercepted to inject crashes and write failures.
pub struct FaultyStore<S> {
    pub inner: S,
    on_append: Box<AppendHook>,
}

impl<S: Store> FaultyStore<S> {
    pub fn new(
        inner: S,
        on_append: impl Fn(&str, &[Record]) -> Option<Result<(), StoreError>> + Send + Sync + 'static,
    ) -> Self {
        Self { inner, on_append: Box::new(on_append) }
    }
}

impl<S: Store> Store for FaultyStore<S> {
    fn create(&self, id: &str, records: &[Record]) -> Result<(), StoreError> {
        self.inner.create(id, records)
    }

    fn append(&self, id: &str, records: &[Record]) -> Result<(), StoreError> {
        (self.on_append)(id, records).unwrap_or_else(|| self.inner.append(id, records))
    }

    fn load(&self, id: &str) -> Result<Option<Vec<Record>>, StoreError> {
        self.inner.load(id)
    }

    fn ids(&self) -> Result<Vec<String>, StoreError> {
        self.inner.ids()
    }
}

/// A schema-valid value for any variable.
pub fn sample_value(id: songwell_core::dialogue::VariableId) -> songwell_core::dialogue::VariableValue {
    use songwell_core::dialogue::{LyricsFlag, MusicRecreation, VariableSchema, VariableValue};
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
