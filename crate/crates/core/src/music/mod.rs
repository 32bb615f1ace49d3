//! Style prompts, song generation backends and analysis feature documents.

mod backend;
mod components;
mod features;

pub use backend::{
    request_song, AnalysisBackend, MockMusicBackend, MusicBackend, MusicError, SongArtifact, SongRequest,
    MOCK_DURATION_MS, MOCK_FEATURES,
};
pub use components::{build_style_prompt, IncompleteComponents, MusicComponents, StylePrompt, STYLE_PROMPT_MAX_CHARS};
pub use features::{
    ingest_features, AnalysisFeatures, Beat, FeatureError, Ingested, LevelSample, MoodLabel, PitchSample, TimedToken,
    FEATURES_VERSION,
};
