use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::vars::{RequiredVariableSet, VariableId, VariableSchema};
use crate::checksum;

pub const DEFAULT_REGISTRY: &str = include_str!("../../config/registry.toml");
pub const REGISTRY_VERSION: &str = "registry/1";

/// The four therapy states, in forward order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TherapyState {
    TherapeuticConnection,
    MakingLyrics,
    MakingMusic,
    SongDiscussion,
}

impl TherapyState {
    pub const ALL: [TherapyState; 4] = [
        TherapyState::TherapeuticConnection,
        TherapyState::MakingLyrics,
        TherapyState::MakingMusic,
        TherapyState::SongDiscussion,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn next(self) -> Option<Self> {
        Self::ALL.get(self.ordinal() + 1).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TherapyState::TherapeuticConnection => "therapeutic_connection",
            TherapyState::MakingLyrics => "making_lyrics",
            TherapyState::MakingMusic => "making_music",
            TherapyState::SongDiscussion => "song_discussion",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TherapyState::TherapeuticConnection => "Therapeutic Connection",
            TherapyState::MakingLyrics => "Making Lyrics",
            TherapyState::MakingMusic => "Making Music",
            TherapyState::SongDiscussion => "Song Discussion",
        }
    }
}

impl fmt::Display for TherapyState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Step identifier, e.g. `motivation_building`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StepId(String);

impl StepId {
    pub fn new(name: impl Into<String>) -> Self {
        StepId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StepId {
    fn from(s: &str) -> Self {
        StepId(s.to_string())
    }
}

impl PartialEq<&str> for StepId {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// Names of the shipped steps.
pub mod steps {
    pub const RAPPORT_BUILDING: &str = "rapport_building";
    pub const MOTIVATION_BUILDING: &str = "motivation_building";
    pub const DISCUSSION_MUSIC_PREFERENCE: &str = "discussion_music_preference";
    pub const MAKING_CONCEPT: &str = "making_concept";
    pub const MAKING_LYRICS: &str = "making_lyrics";
    pub const LYRICS_DISCUSSION: &str = "lyrics_discussion";
    pub const MAKING_MUSIC: &str = "making_music";
    pub const REVISING_MUSIC: &str = "revising_music";
    pub const MUSICAL_SELF_EXPLORATION: &str = "musical_self_exploration";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionId {
    GenerateLyrics,
    GenerateStylePrompt,
    GenerateMusic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionTrigger {
    /// Fires each time the cursor moves into the step.
    Entry,
    /// Fires when the step completes and the cursor moves on.
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemAction {
    pub id: ActionId,
    pub on: ActionTrigger,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TherapyStep {
    pub state: TherapyState,
    pub name: StepId,
    /// Position within its state, from zero.
    pub ordinal: usize,
    pub required: Vec<VariableId>,
    pub actions: Vec<SystemAction>,
}

impl TherapyStep {
    pub fn actions_on(&self, trigger: ActionTrigger) -> impl Iterator<Item = ActionId> + '_ {
        self.actions.iter().filter(move |a| a.on == trigger).map(|a| a.id)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown step `{0}`")]
    UnknownStep(String),
    #[error("registry document does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported registry version `{0}`")]
    Version(String),
    #[error("invalid registry: {0}")]
    Invalid(String),
    #[error("cannot revert to `{0}`: only making_lyrics and making_music are revert targets")]
    InvalidRevertTarget(TherapyState),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryDoc {
    version: String,
    steps: Vec<StepDoc>,
    variables: BTreeMap<VariableId, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepDoc {
    state: TherapyState,
    name: String,
    #[serde(default)]
    required: Vec<VariableId>,
    #[serde(default)]
    actions: Vec<SystemAction>,
}

/// The state/step/variable table that gates the dialogue.
#[derive(Debug, Clone)]
pub struct Registry {
    steps: Vec<TherapyStep>,
    descriptions: BTreeMap<VariableId, String>,
    owners: BTreeMap<VariableId, usize>,
    checksum: String,
}

impl Registry {
    pub fn shipped() -> Self {
        Self::from_toml(DEFAULT_REGISTRY).expect("shipped registry is valid")
    }

    pub fn from_toml(doc: &str) -> Result<Self, RegistryError> {
        let parsed: RegistryDoc = toml::from_str(doc)?;
        if parsed.version != REGISTRY_VERSION {
            return Err(RegistryError::Version(parsed.version));
        }
        let mut steps: Vec<TherapyStep> = Vec::with_capacity(parsed.steps.len());
        for s in parsed.steps {
            let ordinal = steps.iter().filter(|p| p.state == s.state).count();
            steps.push(TherapyStep {
                state: s.state,
                name: StepId(s.name),
                ordinal,
                required: s.required,
                actions: s.actions,
            });
        }
        let registry = Self::build(steps, parsed.variables, checksum(doc))?;
        Ok(registry)
    }

    fn build(
        steps: Vec<TherapyStep>,
        descriptions: BTreeMap<VariableId, String>,
        checksum: String,
    ) -> Result<Self, RegistryError> {
        let invalid = |m: String| Err(RegistryError::Invalid(m));

        // States appear in forward order and every state has a step.
        for pair in steps.windows(2) {
            if pair[1].state < pair[0].state {
                return invalid(format!("step `{}` is listed after a later state", pair[1].name));
            }
        }
        for state in TherapyState::ALL {
            if !steps.iter().any(|s| s.state == state) {
                return invalid(format!("state `{state}` has no steps"));
            }
        }
        let mut names = BTreeSet::new();
        for s in &steps {
            if s.name.0.trim().is_empty() {
                return invalid("empty step name".into());
            }
            if !names.insert(s.name.clone()) {
                return invalid(format!("duplicate step `{}`", s.name));
            }
        }

        let mut owners = BTreeMap::new();
        for (idx, s) in steps.iter().enumerate() {
            for v in &s.required {
                if owners.insert(*v, idx).is_some() {
                    return invalid(format!("variable `{v}` is required by more than one step"));
                }
            }
        }
        for v in VariableId::ALL {
            if !owners.contains_key(&v) {
                return invalid(format!("variable `{v}` is not required by any step"));
            }
            match descriptions.get(&v) {
                Some(d) if !d.trim().is_empty() => {}
                _ => return invalid(format!("variable `{v}` has no description")),
            }
        }

        // The structured variables drive the revision loops, so their steps are pinned.
        let flag_step = &steps[owners[&VariableId::LyricsFlag]];
        if flag_step.state != TherapyState::MakingLyrics || flag_step.ordinal == 0 {
            return invalid("lyrics_flag must belong to a non-first making_lyrics step".into());
        }
        let rec_step = &steps[owners[&VariableId::MusicRecreation]];
        let rec_is_last = !steps.iter().any(|s| s.state == rec_step.state && s.ordinal > rec_step.ordinal);
        if rec_step.state != TherapyState::SongDiscussion || rec_is_last {
            return invalid("music_recreation must belong to a non-last song_discussion step".into());
        }
        debug_assert!(matches!(VariableId::LyricsFlag.schema(), VariableSchema::LyricsFlag));

        Ok(Self { steps, descriptions, owners, checksum })
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn steps(&self) -> &[TherapyStep] {
        &self.steps
    }

    pub fn step(&self, name: &StepId) -> Result<&TherapyStep, RegistryError> {
        self.steps.iter().find(|s| &s.name == name).ok_or_else(|| RegistryError::UnknownStep(name.to_string()))
    }

    pub fn step_by_name(&self, name: &str) -> Result<&TherapyStep, RegistryError> {
        self.step(&StepId::from(name))
    }

    /// Global position of a step in forward order.
    pub fn position(&self, name: &StepId) -> Result<usize, RegistryError> {
        self.steps.iter().position(|s| &s.name == name).ok_or_else(|| RegistryError::UnknownStep(name.to_string()))
    }

    pub fn first_step(&self, state: TherapyState) -> &TherapyStep {
        self.steps.iter().find(|s| s.state == state).expect("validated: every state has a step")
    }

    pub fn initial_step(&self) -> &TherapyStep {
        &self.steps[0]
    }

    /// The following step, if any, regardless of state.
    pub fn successor(&self, name: &StepId) -> Result<Option<&TherapyStep>, RegistryError> {
        let pos = self.position(name)?;
        Ok(self.steps.get(pos + 1))
    }

    pub fn predecessor(&self, name: &StepId) -> Result<Option<&TherapyStep>, RegistryError> {
        let pos = self.position(name)?;
        Ok(pos.checked_sub(1).map(|p| &self.steps[p]))
    }

    pub fn owner(&self, var: VariableId) -> &TherapyStep {
        &self.steps[self.owners[&var]]
    }

    pub fn description(&self, var: VariableId) -> &str {
        &self.descriptions[&var]
    }

    pub fn fresh_variables(&self) -> RequiredVariableSet {
        RequiredVariableSet::unfilled(|v| self.descriptions[&v].clone())
    }

    /// Pure gate: every required variable of `step` is filled.
    pub fn check_step_complete(&self, step: &StepId, vars: &RequiredVariableSet) -> Result<bool, RegistryError> {
        let step = self.step(step)?;
        Ok(step.required.iter().all(|v| vars.is_filled(*v)))
    }

    /// Variables owned by `state` and every later state, in variable order.
    pub fn variables_from(&self, state: TherapyState) -> Vec<VariableId> {
        VariableId::ALL.into_iter().filter(|v| self.owner(*v).state >= state).collect()
    }
}
