use serde::{Deserialize, Deserializer, Serialize};

/// Longest rendered style prompt, inclusive.
pub const STYLE_PROMPT_MAX_CHARS: usize = 150;
const KEYWORD_SEPARATOR: &str = ", ";

/// Musical choices elicited from the user, as returned by the composer prompt.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MusicComponents {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genre: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tempo: Option<String>,
    #[serde(default, deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub instrumentation: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mood: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocal_tone: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhythm: Option<String>,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(String),
        Many(Vec<String>),
        Nothing(()),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
        OneOrMany::Nothing(()) => Vec::new(),
    })
}

impl MusicComponents {
    /// Parses a composer reply: a JSON object, optionally fenced.
    pub fn from_reply(raw: &str) -> Result<Self, String> {
        let t = raw.trim();
        let body = match t.strip_prefix("```") {
            Some(rest) => {
                let rest = rest.split_once('\n').map(|(_, b)| b).unwrap_or("");
                rest.trim_end().strip_suffix("```").unwrap_or(rest)
            }
            None => t,
        };
        serde_json::from_str(body.trim()).map_err(|e| format!("composer reply is not a components object: {e}"))
    }

    /// Components in keyword priority order.
    fn prioritized(&self) -> Vec<&str> {
        [&self.genre, &self.mood, &self.tempo, &self.dynamics, &self.rhythm, &self.vocal_tone]
            .into_iter()
            .filter_map(|c| c.as_deref())
            .chain(self.instrumentation.iter().map(String::as_str))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("music components are incomplete: need at least one of {}", missing.join(", "))]
pub struct IncompleteComponents {
    pub missing: Vec<&'static str>,
}

/// Comma-separated keyword prompt for the music backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StylePrompt {
    pub keywords: Vec<String>,
    pub rendered_text: String,
}

impl StylePrompt {
    fn from_keywords(keywords: Vec<String>) -> Self {
        let rendered_text = keywords.join(KEYWORD_SEPARATOR);
        Self { keywords, rendered_text }
    }
}

fn clean_keyword(raw: &str) -> String {
    let stripped: String = raw.chars().filter(|c| !matches!(c, '.' | '!' | '?')).collect();
    let mut keyword = stripped.split_whitespace().collect::<Vec<_>>().join(" ");
    if keyword.chars().count() > STYLE_PROMPT_MAX_CHARS {
        keyword = keyword.chars().take(STYLE_PROMPT_MAX_CHARS).collect::<String>().trim_end().to_string();
    }
    keyword
}

fn present(field: &Option<String>) -> bool {
    field.as_deref().is_some_and(|s| !clean_keyword(s).replace(',', "").trim().is_empty())
}

/// Assembles the bounded style prompt. Keywords run genre, mood, tempo, dynamics, rhythm,
/// vocal tone, then instruments; the tail is dropped until the text fits.
pub fn build_style_prompt(components: &MusicComponents) -> Result<StylePrompt, IncompleteComponents> {
    if !present(&components.genre) && !present(&components.mood) {
        return Err(IncompleteComponents { missing: vec!["genre", "mood"] });
    }
    let mut keywords: Vec<String> = Vec::new();
    for part in components.prioritized().into_iter().flat_map(|c| c.split(',')) {
        let keyword = clean_keyword(part);
        if !keyword.is_empty() && !keywords.iter().any(|k| k.to_lowercase() == keyword.to_lowercase()) {
            keywords.push(keyword);
        }
    }
    let sep = KEYWORD_SEPARATOR.chars().count();
    let mut len = 0;
    let mut kept = 0;
    for (i, k) in keywords.iter().enumerate() {
        let next = len + k.chars().count() + if i > 0 { sep } else { 0 };
        if next > STYLE_PROMPT_MAX_CHARS {
            break;
        }
        len = next;
        kept += 1;
    }
    keywords.truncate(kept);
    Ok(StylePrompt::from_keywords(keywords))
}
