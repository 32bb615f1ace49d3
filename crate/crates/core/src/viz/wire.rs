use std::fmt::Write;

use super::compile::{VizScript, VIZ_SCRIPT_VERSION};
use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("viz script does not parse: {0}")]
    Parse(String),
    #[error("unsupported viz script version `{0}`")]
    Version(String),
}

fn string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// Six-decimal fixed point; never prints a negative zero.
fn norm<F: Scalar>(v: F) -> String {
    let text = format!("{:.6}", v.as_f64());
    match text.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => text,
    }
}

/// Canonical document: fixed key order, integer times, six-decimal norms, one event per line.
pub fn serialize_script<F: Scalar>(script: &VizScript<F>) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"version\": {},", string(&script.version));
    let _ = writeln!(out, "  \"durationMs\": {},", script.duration_ms);
    if let Some(m) = &script.mood_summary {
        let _ = writeln!(
            out,
            "  \"moodSummary\": {{\"dominantMood\": {}, \"confidence\": {}}},",
            string(&m.dominant_mood),
            norm(m.confidence)
        );
    }
    let lyric: Vec<String> = script
        .lyric_events
        .iter()
        .map(|e| {
            format!(
                "{{\"text\": {}, \"startMs\": {}, \"endMs\": {}, \"yNorm\": {}, \"sizeNorm\": {}, \"moodClass\": {}, \"colorHex\": {}, \"fontStyleClass\": {}}}",
                string(&e.text),
                e.start_ms,
                e.end_ms,
                norm(e.y_norm),
                norm(e.size_norm),
                string(&e.mood_class),
                string(&e.color_hex),
                string(&e.font_style_class)
            )
        })
        .collect();
    let beats: Vec<String> = script
        .beat_events
        .iter()
        .map(|b| format!("{{\"timeMs\": {}, \"intensityNorm\": {}}}", b.time_ms, norm(b.intensity_norm)))
        .collect();
    write_array(&mut out, "lyricEvents", &lyric, true);
    write_array(&mut out, "beatEvents", &beats, false);
    out.push_str("}\n");
    out
}

fn write_array(out: &mut String, key: &str, items: &[String], trailing_comma: bool) {
    let comma = if trailing_comma { "," } else { "" };
    if items.is_empty() {
        let _ = writeln!(out, "  \"{key}\": []{comma}");
        return;
    }
    let _ = writeln!(out, "  \"{key}\": [");
    for (i, item) in items.iter().enumerate() {
        let sep = if i + 1 < items.len() { "," } else { "" };
        let _ = writeln!(out, "    {item}{sep}");
    }
    let _ = writeln!(out, "  ]{comma}");
}

pub fn parse_script<F: Scalar>(document: &str) -> Result<VizScript<F>, WireError> {
    let script: VizScript<F> = serde_json::from_str(document).map_err(|e| WireError::Parse(e.to_string()))?;
    if script.version != VIZ_SCRIPT_VERSION {
        return Err(WireError::Version(script.version));
    }
    Ok(script)
}
