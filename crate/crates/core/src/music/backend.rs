use serde::{Deserialize, Serialize};

use super::components::StylePrompt;
use super::features::FeatureError;
use crate::lyrics::LyricsDocument;

/// Feature document the mock analysis backend returns for every song.
pub const MOCK_FEATURES: &str = include_str!("../../fixtures/features/fx-001.json");
pub const MOCK_DURATION_MS: u64 = 30_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SongRequest<'a> {
    pub lyrics: &'a LyricsDocument,
    pub style: &'a StylePrompt,
    pub title: Option<&'a str>,
    /// How many songs the session already has; lets backends derive stable ids.
    pub sequence: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SongArtifact {
    pub song_id: String,
    /// Opaque locator (path or URL) of the audio.
    pub audio_ref: String,
    pub duration_ms: u64,
    pub style_echo: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MusicError {
    #[error("music backend failed: {0}")]
    Backend(String),
    #[error("invalid song artifact: {0}")]
    InvalidArtifact(String),
    #[error("lyrics are empty")]
    EmptyLyrics,
    #[error("style prompt is empty")]
    EmptyStyle,
    #[error(transparent)]
    Features(#[from] FeatureError),
}

impl MusicError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, MusicError::Backend(_))
    }
}

/// Turns lyrics and a style prompt into audio.
pub trait MusicBackend: Send + Sync {
    fn generate(&self, request: &SongRequest<'_>) -> Result<SongArtifact, MusicError>;
}

/// Produces the raw feature document for a generated song.
pub trait AnalysisBackend: Send + Sync {
    fn analyze(&self, song: &SongArtifact) -> Result<String, MusicError>;
}

/// Deterministic stand-in for both backends, serving the shipped fixture.
#[derive(Debug, Clone)]
pub struct MockMusicBackend {
    pub features: String,
    pub duration_ms: u64,
}

impl Default for MockMusicBackend {
    fn default() -> Self {
        Self { features: MOCK_FEATURES.to_string(), duration_ms: MOCK_DURATION_MS }
    }
}

impl MusicBackend for MockMusicBackend {
    fn generate(&self, request: &SongRequest<'_>) -> Result<SongArtifact, MusicError> {
        let song_id = format!("fx-{:03}", request.sequence + 1);
        Ok(SongArtifact {
            audio_ref: format!("fixtures/audio/{song_id}.wav"),
            song_id,
            duration_ms: self.duration_ms,
            style_echo: request.style.rendered_text.clone(),
            title: request.title.map(str::to_string),
        })
    }
}

impl AnalysisBackend for MockMusicBackend {
    fn analyze(&self, _song: &SongArtifact) -> Result<String, MusicError> {
        Ok(self.features.clone())
    }
}

/// Sends finalized lyrics and style to the backend and checks what comes back.
pub fn request_song(backend: &dyn MusicBackend, request: &SongRequest<'_>) -> Result<SongArtifact, MusicError> {
    if request.lyrics.is_empty() {
        return Err(MusicError::EmptyLyrics);
    }
    if request.style.keywords.is_empty() {
        return Err(MusicError::EmptyStyle);
    }
    let song = backend.generate(request)?;
    if song.duration_ms == 0 {
        return Err(MusicError::InvalidArtifact(format!("song {} has zero duration", song.song_id)));
    }
    if song.audio_ref.trim().is_empty() {
        return Err(MusicError::InvalidArtifact(format!("song {} has no audio", song.song_id)));
    }
    Ok(song)
}
