//! The state/step/variable registry and the rules that move a session through it.

mod registry;
mod transition;
mod vars;

pub use registry::{
    steps, ActionId, ActionTrigger, Registry, RegistryError, StepId, SystemAction, TherapyState, TherapyStep,
    DEFAULT_REGISTRY, REGISTRY_VERSION,
};
pub use transition::{
    next_transition, plan_transition, revert_plan, Progress, TransitionDecision, TransitionKind, TransitionPlan,
    TransitionPolicy,
};
pub use vars::{
    FillStatus, LyricsFlag, MusicRecreation, RequiredVariableSet, UnknownVariable, VariableEntry, VariableId,
    VariableSchema, VariableValue,
};
