use super::library::fill;
use super::{PromptBundle, PromptKind, PromptLibrary, Section, SectionId};
use crate::dialogue::{RequiredVariableSet, TherapyStep, VariableId, VariableSchema};
use crate::llm::{render_transcript, ChatTurn, StepRef};
use crate::lyrics::LyricsDocument;

/// Turns of chat history kept in a dialogue prompt before older ones are summarized.
pub const DEFAULT_TURN_BUDGET: usize = 60;
/// Turns of context an extraction prompt sees.
pub const EXTRACTION_CONTEXT_TURNS: usize = 3;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CompositionError {
    #[error("no guidance configured for step `{0}`")]
    MissingGuidance(String),
    #[error("template `{template}` left placeholder `{{{name}}}` unresolved")]
    UnresolvedPlaceholder { template: &'static str, name: String },
    #[error("step `{0}` has no required variables to extract")]
    NoRequiredVariables(String),
    #[error("every variable of step `{0}` is already filled")]
    NothingToExtract(String),
}

/// Extra instructions appended to the state guidance for one turn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DialogueNote {
    /// The user has stalled; offer the question again, more gently.
    Reoffer,
    /// The session is ending; say goodbye.
    Closing,
    /// A revision request was refused by the round cap.
    Capped,
    /// Free-form context such as the current lyrics.
    Context(String),
}

#[derive(Debug, Clone, Copy)]
pub struct DialogueInput<'a> {
    pub user_name: &'a str,
    pub history: &'a [ChatTurn],
    pub step: &'a TherapyStep,
    pub vars: &'a RequiredVariableSet,
    pub notes: &'a [DialogueNote],
    pub turn_budget: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ExtractionInput<'a> {
    pub history: &'a [ChatTurn],
    pub step: &'a TherapyStep,
    pub vars: &'a RequiredVariableSet,
}

fn filled(template: &'static str, body: &str, values: &[(&str, &str)]) -> Result<String, CompositionError> {
    fill(body, values).map_err(|name| CompositionError::UnresolvedPlaceholder { template, name })
}

fn step_ref(step: &TherapyStep) -> StepRef {
    StepRef { state: step.state, step: step.name.clone() }
}

fn unfilled(step: &TherapyStep, vars: &RequiredVariableSet) -> Vec<VariableId> {
    step.required.iter().copied().filter(|v| !vars.is_filled(*v)).collect()
}

fn variable_lines(ids: &[VariableId], vars: &RequiredVariableSet) -> String {
    ids.iter()
        .map(|id| {
            let description = vars.entry(*id).map(|e| e.description.as_str()).unwrap_or_default();
            format!("- {}: {}", id.as_str(), description)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn bounded_history(history: &[ChatTurn], budget: usize) -> String {
    if history.len() <= budget {
        return render_transcript(history);
    }
    let omitted = history.len() - budget;
    let kept = render_transcript(&history[omitted..]);
    if kept.is_empty() {
        format!("[{omitted} earlier turns omitted]")
    } else {
        format!("[{omitted} earlier turns omitted]\n{kept}")
    }
}

/// Builds the prompt for the agent's next dialogue turn.
pub fn compose_dialogue_prompt(
    input: DialogueInput<'_>,
    library: &PromptLibrary,
) -> Result<PromptBundle, CompositionError> {
    let step = input.step;
    let guidance = library
        .guidance_for(step.name.as_str())
        .ok_or_else(|| CompositionError::MissingGuidance(step.name.to_string()))?;
    let mut state_guidance =
        format!("Current state: {}. Current step: {}.\n{}", step.state.label(), step.name, guidance);
    for note in input.notes {
        state_guidance.push_str("\n\n");
        state_guidance.push_str(match note {
            DialogueNote::Reoffer => &library.notes.reoffer,
            DialogueNote::Closing => &library.notes.closing,
            DialogueNote::Capped => &library.notes.capped,
            DialogueNote::Context(text) => text,
        });
    }
    let missing = unfilled(step, input.vars);
    let variables =
        if missing.is_empty() { "- none remaining".to_string() } else { variable_lines(&missing, input.vars) };
    let history = bounded_history(input.history, input.turn_budget);

    let t = &library.dialogue;
    let sections = vec![
        Section::new(SectionId::Role, filled("dialogue.role", &t.role, &[("user_name", input.user_name)])?),
        Section::new(
            SectionId::ChatHistory,
            filled("dialogue.chat_history", &t.chat_history, &[("chat_history", &history)])?,
        ),
        Section::new(
            SectionId::StateGuidance,
            filled("dialogue.state_guidance", &t.state_guidance, &[("state_guidance", &state_guidance)])?,
        ),
        Section::new(
            SectionId::RequiredVariables,
            filled("dialogue.required_variables", &t.required_variables, &[("required_variables", &variables)])?,
        ),
        Section::new(SectionId::DialogueRules, filled("dialogue.dialogue_rules", &t.dialogue_rules, &[])?),
        Section::new(SectionId::SupportiveEmpathy, filled("dialogue.supportive_empathy", &t.supportive_empathy, &[])?),
        Section::new(SectionId::CrisisRules, filled("dialogue.crisis_rules", &t.crisis_rules, &[])?),
        Section::new(SectionId::OutputConstraints, filled("dialogue.output_constraints", &t.output_constraints, &[])?),
    ];
    Ok(PromptBundle::new(PromptKind::Dialogue, sections, Some(step_ref(step)), missing))
}

fn value_format(id: VariableId) -> String {
    let format = match id.schema() {
        VariableSchema::Text => "short text".to_string(),
        VariableSchema::Sentences { min } => format!("text containing at least {min} sentences"),
        VariableSchema::LyricsFlag => r#"{"changeNeeded": true or false}"#.to_string(),
        VariableSchema::MusicRecreation => {
            r#"{"reviseLyrics": true or false, "reviseMusic": true or false, "notes": text}"#.to_string()
        }
    };
    format!("- {}: {}", id.as_str(), format)
}

/// Builds the prompt that asks the backend to fill the step's unfilled variables.
pub fn compose_extraction_prompt(
    input: ExtractionInput<'_>,
    library: &PromptLibrary,
) -> Result<PromptBundle, CompositionError> {
    let step = input.step;
    if step.required.is_empty() {
        return Err(CompositionError::NoRequiredVariables(step.name.to_string()));
    }
    let missing = unfilled(step, input.vars);
    if missing.is_empty() {
        return Err(CompositionError::NothingToExtract(step.name.to_string()));
    }
    let from = input.history.len().saturating_sub(EXTRACTION_CONTEXT_TURNS);
    let recent = render_transcript(&input.history[from..]);
    let targets = variable_lines(&missing, input.vars);
    let keys = missing.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(", ");
    let formats = missing.iter().map(|v| value_format(*v)).collect::<Vec<_>>().join("\n");

    let t = &library.extraction;
    let sections = vec![
        Section::new(SectionId::Role, filled("extraction.role", &t.role, &[])?),
        Section::new(SectionId::DialogueRules, filled("extraction.dialogue_rules", &t.dialogue_rules, &[])?),
        Section::new(
            SectionId::RecentTurns,
            filled("extraction.recent_turns", &t.recent_turns, &[("recent_turns", &recent)])?,
        ),
        Section::new(
            SectionId::TargetVariables,
            filled("extraction.target_variables", &t.target_variables, &[("target_variables", &targets)])?,
        ),
        Section::new(
            SectionId::OutputSchema,
            filled("extraction.output_schema", &t.output_schema, &[("keys", &keys), ("value_formats", &formats)])?,
        ),
    ];
    Ok(PromptBundle::new(PromptKind::Extraction, sections, Some(step_ref(step)), missing))
}

fn input_lines(vars: &RequiredVariableSet, ids: &[VariableId]) -> String {
    ids.iter()
        .map(|id| {
            let value = vars.value(*id).map(|v| v.display_text()).unwrap_or_else(|| "(not provided)".into());
            format!("- {}: {}", id.as_str(), value)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Builds the lyric-writing prompt. `previous` is the version being revised, if any.
pub fn compose_lyricist_prompt(
    step: &TherapyStep,
    vars: &RequiredVariableSet,
    previous: Option<&LyricsDocument>,
    library: &PromptLibrary,
) -> Result<PromptBundle, CompositionError> {
    use VariableId::*;
    let mut inputs = input_lines(vars, &[Concept, Emotion, LyricsKeyword, LyricsSentence, LyricsFlow, MusicInfo]);
    if let Some(prev) = previous {
        inputs.push_str("\n- previous lyrics (adapt them, keeping their original intent):\n");
        inputs.push_str(&prev.full_text);
    }
    let t = &library.lyricist;
    let sections = vec![
        Section::new(SectionId::Role, filled("lyricist.role", &t.role, &[])?),
        Section::new(SectionId::Inputs, filled("lyricist.inputs", &t.inputs, &[("inputs", &inputs)])?),
        Section::new(SectionId::OutputConstraints, filled("lyricist.output_constraints", &t.output_constraints, &[])?),
    ];
    Ok(PromptBundle::new(PromptKind::Lyricist, sections, Some(step_ref(step)), Vec::new()))
}

/// Builds the prompt that turns musical choices into style components.
pub fn compose_composer_prompt(
    step: &TherapyStep,
    vars: &RequiredVariableSet,
    library: &PromptLibrary,
) -> Result<PromptBundle, CompositionError> {
    use VariableId::*;
    let inputs = input_lines(vars, &[Title, MusicConcept, MusicInfo, Concept, Emotion]);
    let t = &library.composer;
    let sections = vec![
        Section::new(SectionId::Role, filled("composer.role", &t.role, &[])?),
        Section::new(SectionId::Inputs, filled("composer.inputs", &t.inputs, &[("inputs", &inputs)])?),
        Section::new(SectionId::OutputConstraints, filled("composer.output_constraints", &t.output_constraints, &[])?),
    ];
    Ok(PromptBundle::new(PromptKind::Composer, sections, Some(step_ref(step)), Vec::new()))
}
