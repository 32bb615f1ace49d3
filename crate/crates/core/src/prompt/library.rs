use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::Deserialize;

use crate::dialogue::Registry;

pub const DEFAULT_PROMPTS: &str = include_str!("../../config/prompts.toml");
pub const PROMPTS_VERSION: &str = "prompts/1";

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([a-z_]+)\}").unwrap());

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("prompt library does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported prompt library version `{0}`")]
    Version(String),
    #[error("template `{template}` uses unknown placeholder `{{{name}}}`")]
    UnknownPlaceholder { template: String, name: String },
    #[error("template `{template}` is missing placeholder `{{{name}}}`")]
    MissingPlaceholder { template: String, name: String },
    #[error("no guidance for step `{0}`")]
    MissingGuidance(String),
    #[error("guidance for step `{0}` has no matching registry step")]
    UnknownGuidance(String),
    #[error("guidance for `{a}` overlaps guidance for `{b}`")]
    OverlappingGuidance { a: String, b: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DialogueTemplates {
    pub role: String,
    pub chat_history: String,
    pub state_guidance: String,
    pub required_variables: String,
    pub dialogue_rules: String,
    pub supportive_empathy: String,
    pub crisis_rules: String,
    pub output_constraints: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoteTemplates {
    pub reoffer: String,
    pub closing: String,
    pub capped: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionTemplates {
    pub role: String,
    pub dialogue_rules: String,
    pub recent_turns: String,
    pub target_variables: String,
    pub output_schema: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationTemplates {
    pub role: String,
    pub inputs: String,
    pub output_constraints: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LibraryDoc {
    version: String,
    dialogue: DialogueTemplates,
    guidance: BTreeMap<String, String>,
    notes: NoteTemplates,
    extraction: ExtractionTemplates,
    lyricist: GenerationTemplates,
    composer: GenerationTemplates,
}

/// Templates and per-step guidance. Immutable once loaded.
#[derive(Debug, Clone)]
pub struct PromptLibrary {
    pub dialogue: DialogueTemplates,
    pub guidance: BTreeMap<String, String>,
    pub notes: NoteTemplates,
    pub extraction: ExtractionTemplates,
    pub lyricist: GenerationTemplates,
    pub composer: GenerationTemplates,
    checksum: String,
}

/// Placeholders each template must use, and no others.
fn placeholder_rules(doc: &LibraryDoc) -> Vec<(String, &str, &'static [&'static str])> {
    let d = &doc.dialogue;
    let e = &doc.extraction;
    let mut rules: Vec<(String, &str, &'static [&'static str])> = vec![
        ("dialogue.role".into(), &d.role, &["user_name"]),
        ("dialogue.chat_history".into(), &d.chat_history, &["chat_history"]),
        ("dialogue.state_guidance".into(), &d.state_guidance, &["state_guidance"]),
        ("dialogue.required_variables".into(), &d.required_variables, &["required_variables"]),
        ("dialogue.dialogue_rules".into(), &d.dialogue_rules, &[]),
        ("dialogue.supportive_empathy".into(), &d.supportive_empathy, &[]),
        ("dialogue.crisis_rules".into(), &d.crisis_rules, &[]),
        ("dialogue.output_constraints".into(), &d.output_constraints, &[]),
        ("notes.reoffer".into(), &doc.notes.reoffer, &[]),
        ("notes.closing".into(), &doc.notes.closing, &[]),
        ("notes.capped".into(), &doc.notes.capped, &[]),
        ("extraction.role".into(), &e.role, &[]),
        ("extraction.dialogue_rules".into(), &e.dialogue_rules, &[]),
        ("extraction.recent_turns".into(), &e.recent_turns, &["recent_turns"]),
        ("extraction.target_variables".into(), &e.target_variables, &["target_variables"]),
        ("extraction.output_schema".into(), &e.output_schema, &["keys", "value_formats"]),
    ];
    for (name, t) in [("lyricist", &doc.lyricist), ("composer", &doc.composer)] {
        rules.push((format!("{name}.role"), &t.role, &[]));
        rules.push((format!("{name}.inputs"), &t.inputs, &["inputs"]));
        rules.push((format!("{name}.output_constraints"), &t.output_constraints, &[]));
    }
    for (step, text) in &doc.guidance {
        rules.push((format!("guidance.{step}"), text, &[]));
    }
    rules
}

pub(crate) fn placeholders(template: &str) -> BTreeSet<&str> {
    PLACEHOLDER.captures_iter(template).map(|c| c.get(1).unwrap().as_str()).collect()
}

/// Substitutes `{name}` placeholders in one pass; inserted values are never rescanned.
pub(crate) fn fill(template: &str, values: &[(&str, &str)]) -> Result<String, String> {
    let mut out = String::with_capacity(template.len());
    let mut last = 0;
    for cap in PLACEHOLDER.captures_iter(template) {
        let whole = cap.get(0).unwrap();
        let name = &cap[1];
        let value = values.iter().find(|(k, _)| *k == name).map(|(_, v)| *v).ok_or_else(|| name.to_string())?;
        out.push_str(&template[last..whole.start()]);
        out.push_str(value);
        last = whole.end();
    }
    out.push_str(&template[last..]);
    Ok(out)
}

impl PromptLibrary {
    pub fn shipped() -> Self {
        Self::from_toml(DEFAULT_PROMPTS).expect("shipped prompt library is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let doc: LibraryDoc = toml::from_str(text)?;
        if doc.version != PROMPTS_VERSION {
            return Err(ConfigError::Version(doc.version));
        }
        for (template, body, allowed) in placeholder_rules(&doc) {
            let used = placeholders(body);
            if let Some(name) = used.iter().find(|n| !allowed.contains(n)) {
                return Err(ConfigError::UnknownPlaceholder { template, name: name.to_string() });
            }
            if let Some(name) = allowed.iter().find(|n| !used.contains(*n)) {
                return Err(ConfigError::MissingPlaceholder { template, name: name.to_string() });
            }
        }
        for (a, ta) in &doc.guidance {
            for (b, tb) in &doc.guidance {
                if a != b && (ta.trim().is_empty() || tb.contains(ta.as_str())) {
                    return Err(ConfigError::OverlappingGuidance { a: a.clone(), b: b.clone() });
                }
            }
        }
        Ok(Self {
            dialogue: doc.dialogue,
            guidance: doc.guidance,
            notes: doc.notes,
            extraction: doc.extraction,
            lyricist: doc.lyricist,
            composer: doc.composer,
            checksum: crate::checksum(text),
        })
    }

    /// Checks that guidance covers exactly the registry's steps.
    pub fn validate_for(&self, registry: &Registry) -> Result<(), ConfigError> {
        for step in registry.steps() {
            if !self.guidance.contains_key(step.name.as_str()) {
                return Err(ConfigError::MissingGuidance(step.name.to_string()));
            }
        }
        for name in self.guidance.keys() {
            if registry.step_by_name(name).is_err() {
                return Err(ConfigError::UnknownGuidance(name.clone()));
            }
        }
        Ok(())
    }

    pub fn guidance_for(&self, step: &str) -> Option<&str> {
        self.guidance.get(step).map(String::as_str)
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_library_covers_registry() {
        let lib = PromptLibrary::shipped();
        lib.validate_for(&Registry::shipped()).unwrap();
        assert_eq!(lib.guidance.len(), 9);
        assert!(lib.guidance["making_lyrics"].contains("What kind of image comes to mind?"));
    }

    #[test]
    fn fill_does_not_rescan_values() {
        assert_eq!(fill("hi {user_name}!", &[("user_name", "{chat_history}")]).unwrap(), "hi {chat_history}!");
        assert_eq!(fill("{x}", &[]).unwrap_err(), "x");
    }

    #[test]
    fn unknown_placeholder_rejected() {
        let doc = DEFAULT_PROMPTS.replace("The user's name is {user_name}.", "The user's name is {username}.");
        assert!(matches!(PromptLibrary::from_toml(&doc), Err(ConfigError::UnknownPlaceholder { .. })));
    }

    #[test]
    fn missing_guidance_is_a_config_error() {
        let start = DEFAULT_PROMPTS.find("making_music = ").unwrap();
        let end = start + DEFAULT_PROMPTS[start..].find('\n').unwrap() + 1;
        let doc = format!("{}{}", &DEFAULT_PROMPTS[..start], &DEFAULT_PROMPTS[end..]);
        let lib = PromptLibrary::from_toml(&doc).unwrap();
        assert!(
            matches!(lib.validate_for(&Registry::shipped()), Err(ConfigError::MissingGuidance(s)) if s == "making_music")
        );
    }

    #[test]
    fn checksum_tracks_text() {
        let a = PromptLibrary::shipped();
        let b = PromptLibrary::from_toml(&DEFAULT_PROMPTS.replace("light icebreaking", "gentle icebreaking")).unwrap();
        assert_ne!(a.checksum(), b.checksum());
    }
}
