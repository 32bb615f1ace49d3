use serde::{Deserialize, Serialize};

use super::moods::MoodStyleTable;
use crate::align::TimedLyrics;
use crate::music::AnalysisFeatures;
use crate::num::Scalar;

pub const VIZ_SCRIPT_VERSION: &str = "vizscript/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, bound = "F: Scalar")]
pub struct LyricEvent<F> {
    pub text: String,
    pub start_ms: u64,
    pub end_ms: u64,
    /// Vertical position from mean pitch; 0 is the lowest pitch of the song.
    pub y_norm: F,
    /// Text size from mean loudness.
    pub size_norm: F,
    pub mood_class: String,
    pub color_hex: String,
    pub font_style_class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, bound = "F: Scalar")]
pub struct BeatEvent<F> {
    pub time_ms: u64,
    pub intensity_norm: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, bound = "F: Scalar")]
pub struct MoodSummary<F> {
    pub dominant_mood: String,
    pub confidence: F,
}

/// Timed lyric and beat events for the appreciation panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, bound = "F: Scalar")]
pub struct VizScript<F> {
    pub version: String,
    pub duration_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mood_summary: Option<MoodSummary<F>>,
    #[serde(default)]
    pub lyric_events: Vec<LyricEvent<F>>,
    #[serde(default)]
    pub beat_events: Vec<BeatEvent<F>>,
}

impl<F: Scalar> VizScript<F> {
    pub fn empty(duration_ms: u64) -> Self {
        Self {
            version: VIZ_SCRIPT_VERSION.to_string(),
            duration_ms,
            mood_summary: None,
            lyric_events: Vec::new(),
            beat_events: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VizError {
    #[error("mood `{0}` is not in the mood table")]
    UnknownMood(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compiled<F> {
    pub script: VizScript<F>,
    pub warnings: Vec<String>,
}

/// Mean of the values sampled in `[start, end)`, or the sample nearest the interval.
fn interval_mean<F: Scalar>(samples: &[(u64, F)], start: u64, end: u64) -> Option<F> {
    let inside: Vec<F> = samples.iter().filter(|(t, _)| *t >= start && *t < end).map(|(_, v)| *v).collect();
    if !inside.is_empty() {
        let sum = inside.iter().fold(F::zero(), |a, b| a + *b);
        return Some(sum / F::from_usize(inside.len()).expect("count fits"));
    }
    samples
        .iter()
        .min_by_key(|(t, _)| if *t < start { start - t } else { t.saturating_sub(end.saturating_sub(1)) })
        .map(|(_, v)| *v)
}

/// Highest-confidence label; ties go to the lexicographically first label.
fn dominant_mood<F: Scalar>(features: &AnalysisFeatures<F>) -> Option<(String, F)> {
    let mut best: Option<(&str, F)> = None;
    for m in &features.mood_labels {
        let label = m.label.as_str();
        best = match best {
            Some((bl, bc)) if bc > m.confidence || (bc == m.confidence && bl <= label) => Some((bl, bc)),
            _ => Some((label, m.confidence)),
        };
    }
    best.map(|(l, c)| (l.to_lowercase(), c))
}

/// Maps timed lyrics and song features onto visual channels: pitch to height, loudness to
/// size, the song's dominant mood to color and font, beats to pulses.
pub fn compile<F: Scalar>(
    timed: &TimedLyrics,
    features: &AnalysisFeatures<F>,
    table: &MoodStyleTable,
    duration_ms: u64,
) -> Result<Compiled<F>, VizError> {
    let mut warnings = Vec::new();
    let half = F::lit(0.5);

    let pitch: Vec<(u64, F)> = features.pitch_contour.iter().map(|s| (s.time_ms, s.pitch_hz)).collect();
    let loud: Vec<(u64, F)> = features.loudness_envelope.iter().map(|s| (s.time_ms, s.level)).collect();
    let (lo, hi) = pitch.iter().fold((F::infinity(), F::neg_infinity()), |(lo, hi), (_, p)| (lo.min(*p), hi.max(*p)));
    if pitch.is_empty() && !timed.entries.is_empty() {
        warnings.push("empty pitch contour: every yNorm is 0.5".to_string());
    }
    if loud.is_empty() && !timed.entries.is_empty() {
        warnings.push("empty loudness envelope: every sizeNorm is 0.5".to_string());
    }

    let (mood, summary) = match dominant_mood(features) {
        Some((label, confidence)) => (label.clone(), Some(MoodSummary { dominant_mood: label, confidence })),
        None => (table.fallback().to_string(), None),
    };
    let style = table.get(&mood).ok_or_else(|| VizError::UnknownMood(mood.clone()))?;

    let lyric_events = timed
        .entries
        .iter()
        .map(|e| {
            let y_norm = match interval_mean(&pitch, e.start_ms, e.end_ms) {
                Some(mean) if hi > lo => ((mean - lo) / (hi - lo)).unit_clamp(),
                _ => half,
            };
            let size_norm = interval_mean(&loud, e.start_ms, e.end_ms).map_or(half, Scalar::unit_clamp);
            LyricEvent {
                text: e.lyric_token.clone(),
                start_ms: e.start_ms,
                end_ms: e.end_ms,
                y_norm,
                size_norm,
                mood_class: mood.clone(),
                color_hex: style.color.clone(),
                font_style_class: style.font_style.clone(),
            }
        })
        .collect();
    let beat_events = features
        .beats
        .iter()
        .map(|b| BeatEvent { time_ms: b.time_ms, intensity_norm: b.strength.unit_clamp() })
        .collect();

    Ok(Compiled {
        script: VizScript {
            version: VIZ_SCRIPT_VERSION.to_string(),
            duration_ms,
            mood_summary: summary,
            lyric_events,
            beat_events,
        },
        warnings,
    })
}
