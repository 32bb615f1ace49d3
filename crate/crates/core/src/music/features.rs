use serde::{Deserialize, Serialize};

use crate::num::Scalar;

pub const FEATURES_VERSION: &str = "features/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TimedToken {
    pub token: String,
    pub start_ms: u64,
    pub end_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, bound = "F: Scalar")]
pub struct PitchSample<F> {
    pub time_ms: u64,
    pub pitch_hz: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, bound = "F: Scalar")]
pub struct LevelSample<F> {
    pub time_ms: u64,
    pub level: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, bound = "F: Scalar")]
pub struct Beat<F> {
    pub time_ms: u64,
    pub strength: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, bound = "F: Scalar")]
pub struct MoodLabel<F> {
    pub label: String,
    pub confidence: F,
}

/// Analysis of a generated song: word-timed transcript guess plus musical feature series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, bound = "F: Scalar")]
pub struct AnalysisFeatures<F> {
    pub version: String,
    pub predicted_transcript: Vec<TimedToken>,
    pub pitch_contour: Vec<PitchSample<F>>,
    pub loudness_envelope: Vec<LevelSample<F>>,
    pub beats: Vec<Beat<F>>,
    pub mood_labels: Vec<MoodLabel<F>>,
    /// Instrument types; kept but not visualized.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub instruments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeatureError {
    #[error("feature document does not parse: {0}")]
    Parse(String),
    #[error("unsupported feature document version `{0}`")]
    Version(String),
    #[error("invalid feature document: {0}")]
    FeatureInvalid(String),
}

/// A validated document plus what ingestion had to repair.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested<F> {
    pub features: AnalysisFeatures<F>,
    pub warnings: Vec<String>,
    /// The transcript is empty, so there are no words to align.
    pub instrumental: bool,
}

impl<F: Scalar> AnalysisFeatures<F> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("features serialize")
    }

    pub fn is_instrumental(&self) -> bool {
        self.predicted_transcript.is_empty()
    }

    /// Last instant any series mentions.
    pub fn last_time_ms(&self) -> u64 {
        let t = self.predicted_transcript.last().map(|t| t.end_ms);
        let p = self.pitch_contour.last().map(|s| s.time_ms);
        let l = self.loudness_envelope.last().map(|s| s.time_ms);
        let b = self.beats.last().map(|s| s.time_ms);
        [t, p, l, b].into_iter().flatten().max().unwrap_or(0)
    }
}

fn invalid(msg: impl Into<String>) -> FeatureError {
    FeatureError::FeatureInvalid(msg.into())
}

fn strictly_increasing(name: &str, times: impl Iterator<Item = u64>) -> Result<(), FeatureError> {
    let mut prev: Option<u64> = None;
    for (i, t) in times.enumerate() {
        if prev.is_some_and(|p| t <= p) {
            return Err(invalid(format!("{name}[{i}] at {t} ms is not after its predecessor")));
        }
        prev = Some(t);
    }
    Ok(())
}

fn clamp_unit<F: Scalar>(value: &mut F, what: String, warnings: &mut Vec<String>) -> Result<(), FeatureError> {
    if value.is_nan() {
        return Err(invalid(format!("{what} is not a number")));
    }
    let clamped = value.unit_clamp();
    if clamped != *value {
        let msg = format!("{what} = {value} clamped to {clamped}");
        tracing::warn!("{msg}");
        warnings.push(msg);
        *value = clamped;
    }
    Ok(())
}

/// Validates a raw feature document. Out-of-range unit values are clamped with a warning;
/// ordering and interval problems are rejected.
pub fn ingest_features<F: Scalar>(document: &str) -> Result<Ingested<F>, FeatureError> {
    let mut f: AnalysisFeatures<F> = serde_json::from_str(document).map_err(|e| FeatureError::Parse(e.to_string()))?;
    if f.version != FEATURES_VERSION {
        return Err(FeatureError::Version(f.version));
    }
    let mut prev_end: Option<u64> = None;
    for (i, t) in f.predicted_transcript.iter().enumerate() {
        if t.token.trim().is_empty() {
            return Err(invalid(format!("predictedTranscript[{i}] has an empty token")));
        }
        if t.end_ms <= t.start_ms {
            return Err(invalid(format!("predictedTranscript[{i}] ends at or before it starts")));
        }
        if let Some(end) = prev_end {
            if t.start_ms < end {
                return Err(invalid(format!("predictedTranscript[{i}] overlaps or precedes its predecessor")));
            }
        }
        prev_end = Some(t.end_ms);
    }
    strictly_increasing("pitchContour", f.pitch_contour.iter().map(|s| s.time_ms))?;
    strictly_increasing("loudnessEnvelope", f.loudness_envelope.iter().map(|s| s.time_ms))?;
    strictly_increasing("beats", f.beats.iter().map(|s| s.time_ms))?;
    for (i, s) in f.pitch_contour.iter().enumerate() {
        if !(s.pitch_hz.is_finite() && s.pitch_hz > F::zero()) {
            return Err(invalid(format!("pitchContour[{i}] must be a positive frequency")));
        }
    }

    let mut warnings = Vec::new();
    for (i, s) in f.loudness_envelope.iter_mut().enumerate() {
        clamp_unit(&mut s.level, format!("loudnessEnvelope[{i}].level"), &mut warnings)?;
    }
    for (i, b) in f.beats.iter_mut().enumerate() {
        clamp_unit(&mut b.strength, format!("beats[{i}].strength"), &mut warnings)?;
    }
    for (i, m) in f.mood_labels.iter_mut().enumerate() {
        if m.label.trim().is_empty() {
            return Err(invalid(format!("moodLabels[{i}] has an empty label")));
        }
        clamp_unit(&mut m.confidence, format!("moodLabels[{i}].confidence"), &mut warnings)?;
    }
    let instrumental = f.is_instrumental();
    if instrumental {
        warnings.push("empty transcript: treating the song as instrumental".into());
    }
    Ok(Ingested { features: f, warnings, instrumental })
}
