use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::record::{ActionRecord, ExtractionOutcome, Record, SessionHeader, TransitionRecord, TRANSCRIPT_VERSION};
use crate::dialogue::{Registry, RequiredVariableSet, StepId, TherapyState, TransitionDecision, TransitionKind};
use crate::llm::{ChatTurn, Speaker, StepRef};
use crate::lyrics::LyricsDocument;
use crate::music::{SongArtifact, StylePrompt};
use crate::VizScript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SessionStatus {
    Active,
    Ended,
}

/// Every generated artifact, oldest first. Revisions append; nothing is replaced.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Artifacts {
    pub lyrics_versions: Vec<LyricsDocument>,
    pub style_prompts: Vec<StylePrompt>,
    pub songs: Vec<SongArtifact>,
    pub viz_scripts: Vec<VizScript>,
}

/// Everything the engine knows about a session. Always equal to a fold over its records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionState {
    pub header: SessionHeader,
    pub current_state: TherapyState,
    pub current_step: StepId,
    pub vars: RequiredVariableSet,
    pub history: Vec<ChatTurn>,
    pub artifacts: Artifacts,
    pub revision_counts: BTreeMap<TherapyState, u32>,
    pub status: SessionStatus,
    /// Consecutive turns that left the cursor where it was.
    pub stall_count: u32,
    /// Set once any turn matched the crisis lexicon; never cleared.
    pub crisis_banner: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_decision: Option<TransitionDecision>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FoldError {
    #[error("transcript is empty")]
    Empty,
    #[error("first record must be the opening turn with a session header")]
    MissingHeader,
    #[error("unsupported transcript format `{0}`")]
    Format(String),
    #[error("record {record}: {message}")]
    Inconsistent { record: usize, message: String },
}

impl SessionState {
    /// A session positioned at the registry's first step with nothing said yet.
    pub fn new(registry: &Registry, header: SessionHeader) -> Self {
        let first = registry.initial_step();
        Self {
            header,
            current_state: first.state,
            current_step: first.name.clone(),
            vars: registry.fresh_variables(),
            history: Vec::new(),
            artifacts: Artifacts::default(),
            revision_counts: BTreeMap::new(),
            status: SessionStatus::Active,
            stall_count: 0,
            crisis_banner: false,
            last_decision: None,
        }
    }

    /// Rebuilds a session from its records.
    pub fn from_records(registry: &Registry, records: &[Record]) -> Result<Self, FoldError> {
        let header = match records.first() {
            None => return Err(FoldError::Empty),
            Some(Record::Turn(t)) => t.header.clone().ok_or(FoldError::MissingHeader)?,
            Some(_) => return Err(FoldError::MissingHeader),
        };
        if header.format != TRANSCRIPT_VERSION {
            return Err(FoldError::Format(header.format));
        }
        let mut state = Self::new(registry, header);
        for (i, record) in records.iter().enumerate() {
            state.apply(record).map_err(|message| FoldError::Inconsistent { record: i, message })?;
        }
        Ok(state)
    }

    pub fn step_ref(&self) -> StepRef {
        StepRef { state: self.current_state, step: self.current_step.clone() }
    }

    pub fn is_active(&self) -> bool {
        self.status == SessionStatus::Active
    }

    /// The last turn is a user turn that never got its reply.
    pub fn awaiting_retry(&self) -> bool {
        self.is_active() && self.history.last().is_some_and(|t| t.speaker == Speaker::User)
    }

    pub fn user_name(&self) -> &str {
        &self.header.user_name
    }

    /// Applies one record. The engine and the fold share this, so live and replayed
    /// sessions cannot drift apart.
    pub fn apply(&mut self, record: &Record) -> Result<(), String> {
        match record {
            Record::Turn(t) => {
                if t.turn.index != self.history.len() {
                    return Err(format!("turn index {} but history has {} turns", t.turn.index, self.history.len()));
                }
                if t.header.is_some() && !self.history.is_empty() {
                    return Err("session header after the opening turn".into());
                }
                self.crisis_banner |= t.crisis_flag;
                self.history.push(t.turn.clone());
            }
            Record::Extraction(x) => {
                if x.step != self.step_ref() {
                    return Err(format!("extraction for {} while at {}", x.step, self.step_ref()));
                }
                if let ExtractionOutcome::Applied { values, .. } = &x.outcome {
                    for (id, value) in values {
                        self.vars.fill(*id, value.clone(), x.turn);
                    }
                }
            }
            Record::Transition(t) => self.apply_transition(t)?,
        }
        Ok(())
    }

    fn apply_transition(&mut self, t: &TransitionRecord) -> Result<(), String> {
        if t.from != self.step_ref() {
            return Err(format!("transition from {} while at {}", t.from, self.step_ref()));
        }
        if !self.is_active() {
            return Err("transition after the session ended".into());
        }
        self.apply_cursor(t);
        for action in &t.actions {
            self.apply_action(action);
        }
        Ok(())
    }

    /// The cursor, reset and counter part of a transition, without its actions.
    pub(crate) fn apply_cursor(&mut self, t: &TransitionRecord) {
        for id in &t.reset {
            self.vars.reset(*id);
        }
        self.current_state = t.to.state;
        self.current_step = t.to.step.clone();
        if let Some(state) = t.revision_of {
            *self.revision_counts.entry(state).or_insert(0) += 1;
        }
        if t.decision.kind == TransitionKind::Stay {
            self.stall_count += 1;
        } else {
            self.stall_count = 0;
        }
        if t.decision.kind == TransitionKind::EndSession {
            self.status = SessionStatus::Ended;
        }
        self.last_decision = Some(t.decision.clone());
    }

    pub(crate) fn apply_action(&mut self, action: &ActionRecord) {
        let a = &mut self.artifacts;
        match action {
            ActionRecord::GenerateLyrics { lyrics } => a.lyrics_versions.push(lyrics.clone()),
            ActionRecord::GenerateStylePrompt { style, .. } => a.style_prompts.push(style.clone()),
            ActionRecord::GenerateMusic { song, viz_script, .. } => {
                a.songs.push(song.clone());
                a.viz_scripts.push(viz_script.clone());
            }
        }
    }
}
