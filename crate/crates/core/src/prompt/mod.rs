//! Prompt composition: dialogue, extraction and generation bundles built from a versioned library.

mod compose;
mod library;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dialogue::VariableId;
use crate::llm::StepRef;

pub use compose::{
    compose_composer_prompt, compose_dialogue_prompt, compose_extraction_prompt, compose_lyricist_prompt,
    CompositionError, DialogueInput, DialogueNote, ExtractionInput, DEFAULT_TURN_BUDGET, EXTRACTION_CONTEXT_TURNS,
};
pub use library::{ConfigError, PromptLibrary, DEFAULT_PROMPTS, PROMPTS_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PromptKind {
    Dialogue,
    Extraction,
    Lyricist,
    Composer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectionId {
    Role,
    ChatHistory,
    StateGuidance,
    RequiredVariables,
    DialogueRules,
    SupportiveEmpathy,
    CrisisRules,
    OutputConstraints,
    RecentTurns,
    TargetVariables,
    OutputSchema,
    Inputs,
}

impl SectionId {
    /// Fixed order of a dialogue bundle.
    pub const DIALOGUE_ORDER: [SectionId; 8] = [
        SectionId::Role,
        SectionId::ChatHistory,
        SectionId::StateGuidance,
        SectionId::RequiredVariables,
        SectionId::DialogueRules,
        SectionId::SupportiveEmpathy,
        SectionId::CrisisRules,
        SectionId::OutputConstraints,
    ];

    pub const EXTRACTION_ORDER: [SectionId; 5] = [
        SectionId::Role,
        SectionId::DialogueRules,
        SectionId::RecentTurns,
        SectionId::TargetVariables,
        SectionId::OutputSchema,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SectionId::Role => "role",
            SectionId::ChatHistory => "chat-history",
            SectionId::StateGuidance => "state-guidance",
            SectionId::RequiredVariables => "required-variables",
            SectionId::DialogueRules => "dialogue-rules",
            SectionId::SupportiveEmpathy => "supportive-empathy",
            SectionId::CrisisRules => "crisis-rules",
            SectionId::OutputConstraints => "output-constraints",
            SectionId::RecentTurns => "recent-turns",
            SectionId::TargetVariables => "target-variables",
            SectionId::OutputSchema => "output-schema",
            SectionId::Inputs => "inputs",
        }
    }
}

impl fmt::Display for SectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub id: SectionId,
    pub text: String,
}

impl Section {
    pub fn new(id: SectionId, text: impl Into<String>) -> Self {
        Self { id, text: text.into() }
    }

    fn render_into(&self, out: &mut String) {
        out.push_str("## ");
        out.push_str(self.id.as_str());
        out.push('\n');
        out.push_str(&self.text);
    }
}

/// Separator placed between rendered sections.
pub const SECTION_SEPARATOR: &str = "\n\n";

/// A fully composed prompt, ready to send.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub sections: Vec<Section>,
    pub rendered_text: String,
    pub state_ref: Option<StepRef>,
    /// Variables the bundle asks for: the unfilled set of the step.
    pub expected_keys: Vec<VariableId>,
}

impl PromptBundle {
    pub fn new(
        kind: PromptKind,
        sections: Vec<Section>,
        state_ref: Option<StepRef>,
        expected_keys: Vec<VariableId>,
    ) -> Self {
        let mut rendered_text = String::new();
        for (i, section) in sections.iter().enumerate() {
            if i > 0 {
                rendered_text.push_str(SECTION_SEPARATOR);
            }
            section.render_into(&mut rendered_text);
        }
        Self { kind, sections, rendered_text, state_ref, expected_keys }
    }

    pub fn section(&self, id: SectionId) -> Option<&Section> {
        self.sections.iter().find(|s| s.id == id)
    }

    pub fn section_ids(&self) -> Vec<SectionId> {
        self.sections.iter().map(|s| s.id).collect()
    }

    /// Checksum of the rendered text.
    pub fn digest(&self) -> String {
        crate::checksum(&self.rendered_text)
    }

    /// Checksum of each section body, keyed by section id.
    pub fn section_digests(&self) -> BTreeMap<String, String> {
        self.sections.iter().map(|s| (s.id.as_str().to_string(), crate::checksum(&s.text))).collect()
    }
}
