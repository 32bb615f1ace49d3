//! Guided songwriting dialogue engine.
//!
//! A session walks a user through four therapy states (connection, lyrics, music, discussion).
//! Each state has ordered steps gated by required variables that a language model elicits and
//! extracts. Finished lyrics and musical choices become a style prompt for a music backend; the
//! generated song's analysis is aligned back onto the user's lyrics and compiled into a timed
//! visualization script.
//!
//! Numeric code is generic over [`num::Scalar`] (`f32`/`f64`) and [`num::Score`] (signed
//! integers); the aliases below fix the types the engine itself uses.

pub mod align;
pub mod dialogue;
pub mod llm;
pub mod lyrics;
pub mod music;
pub mod num;
pub mod prompt;
pub mod session;
pub mod viz;

use sha2::{Digest, Sha256};

pub type AnalysisFeatures = music::AnalysisFeatures<f64>;
pub type AnalysisFeaturesF32 = music::AnalysisFeatures<f32>;
pub type VizScript = viz::VizScript<f64>;
pub type VizScriptF32 = viz::VizScript<f32>;
pub type Scoring = align::Scoring<i32>;
pub type AlignmentMatrix = align::AlignmentMatrix<i32>;
pub type AlignmentPath = align::AlignmentPath<i32>;

/// Lowercase hex SHA-256 of `text`.
pub fn checksum(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}
