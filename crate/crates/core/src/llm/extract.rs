use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dialogue::{LyricsFlag, MusicRecreation, VariableId, VariableSchema, VariableValue};

/// Values recovered from one extraction reply. Never touches a session by itself.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtractionResult {
    pub values: BTreeMap<VariableId, VariableValue>,
    pub raw_backend_text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_keys: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected: Vec<RejectedValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedValue {
    pub variable: VariableId,
    pub reason: String,
}

/// Parses a backend reply as a key/value document. Keys outside `requested` are dropped,
/// `null` means not found, and values that fail their variable's schema are rejected.
pub fn parse_extraction(raw: &str, requested: &[VariableId]) -> Result<ExtractionResult, String> {
    let body = strip_fences(raw);
    let doc: Value = serde_json::from_str(body).map_err(|e| format!("not a structured document: {e}"))?;
    let Value::Object(map) = doc else {
        return Err("extraction reply is not a key/value object".into());
    };

    let mut result = ExtractionResult { raw_backend_text: raw.to_string(), ..Default::default() };
    for (key, value) in map {
        let Some(id) = key.parse::<VariableId>().ok().filter(|id| requested.contains(id)) else {
            tracing::warn!(key = %key, "dropping unrequested extraction key");
            result.dropped_keys.push(key);
            continue;
        };
        if value.is_null() {
            continue;
        }
        match validate(id, &value) {
            Ok(Some(v)) => {
                result.values.insert(id, v);
            }
            Ok(None) => {}
            Err(reason) => {
                tracing::warn!(variable = %id, %reason, "rejecting extracted value");
                result.rejected.push(RejectedValue { variable: id, reason });
            }
        }
    }
    Ok(result)
}

fn strip_fences(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let rest = rest.split_once('\n').map(|(_, body)| body).unwrap_or("");
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

fn as_text(value: &Value) -> Option<String> {
    let s = match value {
        Value::String(s) => s.trim().to_string(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Array(items) => {
            items.iter().filter_map(as_text).filter(|s| !s.is_empty()).collect::<Vec<_>>().join(", ")
        }
        _ => return None,
    };
    Some(s)
}

fn as_bool(value: &Value) -> Option<bool> {
    match value {
        Value::Bool(b) => Some(*b),
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "true" | "yes" | "y" => Some(true),
            "false" | "no" | "n" => Some(false),
            _ => None,
        },
        _ => None,
    }
}

/// Counts sentence-terminal runs: "Wait... what?!" is two sentences.
pub(crate) fn sentence_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_run = false;
    for c in text.chars() {
        let terminal = matches!(c, '.' | '!' | '?' | '。' | '！' | '？');
        if terminal && !in_run {
            count += 1;
        }
        in_run = terminal;
    }
    count
}

fn validate(id: VariableId, value: &Value) -> Result<Option<VariableValue>, String> {
    match id.schema() {
        VariableSchema::Text => {
            let text = as_text(value).ok_or("expected text")?;
            Ok((!text.is_empty()).then_some(VariableValue::Text(text)))
        }
        VariableSchema::Sentences { min } => {
            let text = as_text(value).ok_or("expected text")?;
            if text.is_empty() {
                return Ok(None);
            }
            let n = sentence_count(&text);
            if n < min {
                return Err(format!("expected at least {min} sentences, found {n}"));
            }
            Ok(Some(VariableValue::Text(text)))
        }
        VariableSchema::LyricsFlag => {
            let flag = match value {
                Value::Object(m) => m.get("changeNeeded").and_then(as_bool),
                other => as_bool(other),
            };
            flag.map(|change_needed| Some(VariableValue::LyricsFlag(LyricsFlag { change_needed })))
                .ok_or_else(|| "expected {\"changeNeeded\": bool}".to_string())
        }
        VariableSchema::MusicRecreation => serde_json::from_value::<MusicRecreation>(value.clone())
            .map(|r| Some(VariableValue::MusicRecreation(r)))
            .map_err(|e| format!("expected {{reviseLyrics, reviseMusic, notes}}: {e}")),
    }
}
