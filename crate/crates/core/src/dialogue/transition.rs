use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::registry::{Registry, RegistryError, StepId, TherapyState};
use super::vars::{RequiredVariableSet, VariableId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum TransitionKind {
    Stay,
    #[serde(rename_all = "camelCase")]
    AdvanceStep {
        to: StepId,
    },
    #[serde(rename_all = "camelCase")]
    AdvanceState {
        to: TherapyState,
        step: StepId,
    },
    /// Lyrics revision loop: stay in the state but go back to the composition step.
    #[serde(rename_all = "camelCase")]
    ReviseLyrics {
        rewind_to: StepId,
    },
    #[serde(rename_all = "camelCase")]
    RevertTo {
        state: TherapyState,
    },
    EndSession,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TransitionDecision {
    #[serde(flatten)]
    pub kind: TransitionKind,
    pub reason: String,
    /// Set when a revision request was refused because the per-state cap was reached.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub capped: bool,
}

impl TransitionDecision {
    fn new(kind: TransitionKind, reason: impl Into<String>) -> Self {
        Self { kind, reason: reason.into(), capped: false }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TransitionPolicy {
    /// Revision rounds allowed per state before a request is overridden.
    pub revision_cap: u32,
}

impl Default for TransitionPolicy {
    fn default() -> Self {
        Self { revision_cap: 3 }
    }
}

/// The part of a session the transition rule looks at.
#[derive(Debug, Clone, Copy)]
pub struct Progress<'a> {
    pub step: &'a StepId,
    pub vars: &'a RequiredVariableSet,
    pub revisions: &'a BTreeMap<TherapyState, u32>,
}

/// The concrete effect of a decision on the cursor and the variable store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionPlan {
    pub to_state: TherapyState,
    pub to_step: StepId,
    pub reset: Vec<VariableId>,
    pub revision_of: Option<TherapyState>,
    pub ends: bool,
}

pub fn next_transition(
    registry: &Registry,
    progress: Progress<'_>,
    policy: TransitionPolicy,
) -> Result<TransitionDecision, RegistryError> {
    let step = registry.step(progress.step)?;
    let missing: Vec<&str> =
        step.required.iter().filter(|v| !progress.vars.is_filled(**v)).map(|v| v.as_str()).collect();
    if !missing.is_empty() {
        return Ok(TransitionDecision::new(TransitionKind::Stay, format!("waiting for {}", missing.join(", "))));
    }
    let rounds = |s: TherapyState| progress.revisions.get(&s).copied().unwrap_or(0);

    let mut capped = None;
    if step.required.contains(&VariableId::LyricsFlag) && progress.vars.lyrics_change_needed() == Some(true) {
        if rounds(TherapyState::MakingLyrics) < policy.revision_cap {
            let rewind_to = registry
                .predecessor(&step.name)?
                .filter(|p| p.state == step.state)
                .map(|p| p.name.clone())
                .unwrap_or_else(|| step.name.clone());
            return Ok(TransitionDecision::new(TransitionKind::ReviseLyrics { rewind_to }, "lyrics change requested"));
        }
        capped = Some("lyrics revision limit reached; keeping the current lyrics");
    }

    if let Some(rec) = progress.vars.music_recreation().filter(|_| step.required.contains(&VariableId::MusicRecreation))
    {
        let target = if rec.revise_lyrics {
            Some(TherapyState::MakingLyrics)
        } else if rec.revise_music {
            Some(TherapyState::MakingMusic)
        } else {
            None
        };
        if let Some(target) = target {
            if rounds(target) < policy.revision_cap {
                return Ok(TransitionDecision::new(
                    TransitionKind::RevertTo { state: target },
                    format!("revision requested: back to {target}"),
                ));
            }
            capped = Some("revision limit reached; keeping the current song");
        }
    }

    let mut decision = match registry.successor(&step.name)? {
        None => TransitionDecision::new(TransitionKind::EndSession, "final step complete"),
        Some(next) if next.state == step.state => TransitionDecision::new(
            TransitionKind::AdvanceStep { to: next.name.clone() },
            format!("{} complete", step.name),
        ),
        Some(next) => TransitionDecision::new(
            TransitionKind::AdvanceState { to: next.state, step: next.name.clone() },
            format!("{} complete", step.state),
        ),
    };
    if let Some(notice) = capped {
        decision.reason = notice.to_string();
        decision.capped = true;
    }
    Ok(decision)
}

/// Resolves what a decision does from the current step.
pub fn plan_transition(
    registry: &Registry,
    current: &StepId,
    kind: &TransitionKind,
) -> Result<TransitionPlan, RegistryError> {
    let here = registry.step(current)?;
    let stay = |ends| TransitionPlan {
        to_state: here.state,
        to_step: here.name.clone(),
        reset: Vec::new(),
        revision_of: None,
        ends,
    };
    Ok(match kind {
        TransitionKind::Stay => stay(false),
        TransitionKind::EndSession => stay(true),
        TransitionKind::AdvanceStep { to } | TransitionKind::AdvanceState { step: to, .. } => {
            let target = registry.step(to)?;
            TransitionPlan {
                to_state: target.state,
                to_step: target.name.clone(),
                reset: Vec::new(),
                revision_of: None,
                ends: false,
            }
        }
        TransitionKind::ReviseLyrics { rewind_to } => {
            let target = registry.step(rewind_to)?;
            let mut reset: Vec<VariableId> = target.required.clone();
            if target.name != here.name {
                reset.extend(here.required.iter().copied());
            }
            TransitionPlan {
                to_state: target.state,
                to_step: target.name.clone(),
                reset,
                revision_of: Some(target.state),
                ends: false,
            }
        }
        TransitionKind::RevertTo { state } => revert_plan(registry, *state)?,
    })
}

/// Cursor and resets for a revert; only the lyrics and music states are valid targets.
pub fn revert_plan(registry: &Registry, target: TherapyState) -> Result<TransitionPlan, RegistryError> {
    if !matches!(target, TherapyState::MakingLyrics | TherapyState::MakingMusic) {
        return Err(RegistryError::InvalidRevertTarget(target));
    }
    let first = registry.first_step(target);
    Ok(TransitionPlan {
        to_state: target,
        to_step: first.name.clone(),
        reset: registry.variables_from(target),
        revision_of: Some(target),
        ends: false,
    })
}
