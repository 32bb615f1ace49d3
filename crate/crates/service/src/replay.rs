use songwell_core::dialogue::VariableId;
use songwell_core::llm::{BackendError, GatewayError, Speaker};
use songwell_core::session::{
    parse_transcript, Engine, FoldError, Record, SessionState, TranscriptParseError, TurnError, TurnFailure,
};

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("transcript does not parse: {0}")]
    Parse(#[from] TranscriptParseError),
    #[error("transcript does not fold: {0}")]
    Fold(#[from] FoldError),
    #[error("turn {turn}: {message}")]
    ScriptedMiss { turn: usize, message: String },
    #[error("turn {turn}: the session could not be restarted: {error}")]
    Open { turn: usize, error: TurnError },
}

/// Result of re-running a transcript's user actions through an engine.
#[derive(Debug)]
pub struct ReplayReport {
    pub original: SessionState,
    pub replayed: SessionState,
    pub replayed_records: Vec<Record>,
    /// Human-readable field differences; empty when the replay matches.
    pub differences: Vec<String>,
}

impl ReplayReport {
    pub fn matches(&self) -> bool {
        self.differences.is_empty()
    }
}

fn scripted_miss(error: &TurnError) -> Option<String> {
    match error {
        TurnError::Gateway(GatewayError::Backend { source: source @ BackendError::ScriptedMiss(_), .. }) => {
            Some(source.to_string())
        }
        _ => None,
    }
}

/// A user-requested end: an end transition directly after an agent turn.
fn is_user_end(records: &[Record], i: usize) -> bool {
    let Record::Transition(t) = &records[i] else {
        return false;
    };
    let after_agent = i > 0 && matches!(&records[i - 1], Record::Turn(p) if p.turn.speaker == Speaker::Agent);
    t.decision.kind == songwell_core::dialogue::TransitionKind::EndSession && after_agent
}

/// Folds the transcript, replays its user messages and end request through `engine`, and
/// compares the two final states.
pub fn replay(engine: &Engine, transcript: &str) -> Result<ReplayReport, ReplayError> {
    let records = parse_transcript(transcript)?;
    let original = engine.fold(&records)?;

    let opened = engine.open_session(original.user_name()).map_err(|f| {
        scripted_miss(&f.error).map_or(ReplayError::Open { turn: 0, error: f.error }, |message| {
            ReplayError::ScriptedMiss { turn: 0, message }
        })
    })?;
    let mut out = opened.records;
    let mut state = opened.state;
    for (i, record) in records.iter().enumerate().skip(1) {
        let result = match record {
            Record::Turn(t) if t.turn.speaker == Speaker::User => engine.process_user_turn(&state, &t.turn.text),
            Record::Transition(_) if is_user_end(&records, i) => engine.end_session(&state),
            _ => continue,
        };
        match result {
            Ok(outcome) => {
                out.extend(outcome.records);
                state = outcome.state;
            }
            Err(TurnFailure { error, records: kept, state: after }) => {
                if let Some(message) = scripted_miss(&error) {
                    return Err(ReplayError::ScriptedMiss { turn: state.history.len(), message });
                }
                out.extend(kept);
                state = after;
            }
        }
    }
    let mut differences = diff_states(&original, &state);
    if differences.is_empty() && out != records {
        let at = out.iter().zip(&records).position(|(a, b)| a != b).unwrap_or(out.len().min(records.len()));
        differences.push(format!("record {at} differs"));
    }
    Ok(ReplayReport { original, replayed: state, replayed_records: out, differences })
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_default()
}

fn clip(text: &str) -> String {
    const MAX: usize = 160;
    match text.char_indices().nth(MAX) {
        Some((at, _)) => format!("{}...", &text[..at]),
        None => text.to_string(),
    }
}

/// Field-level differences between two states, naming variables individually.
pub fn diff_states(original: &SessionState, replayed: &SessionState) -> Vec<String> {
    let mut out = Vec::new();
    let mut field = |name: &str, a: String, b: String| {
        if a != b {
            out.push(format!("{name}: transcript {}, replay {}", clip(&a), clip(&b)));
        }
    };
    field("header", json(&original.header), json(&replayed.header));
    field("state", original.current_state.to_string(), replayed.current_state.to_string());
    field("step", original.current_step.to_string(), replayed.current_step.to_string());
    field("status", json(&original.status), json(&replayed.status));
    for id in VariableId::ALL {
        field(&format!("variable {id}"), json(&original.vars.entry(id)), json(&replayed.vars.entry(id)));
    }
    field("history length", original.history.len().to_string(), replayed.history.len().to_string());
    if let Some(i) = original.history.iter().zip(&replayed.history).position(|(a, b)| a != b) {
        field(&format!("turn {i}"), json(&original.history[i]), json(&replayed.history[i]));
    }
    let (a, b) = (&original.artifacts, &replayed.artifacts);
    field("lyrics versions", json(&a.lyrics_versions), json(&b.lyrics_versions));
    field("style prompts", json(&a.style_prompts), json(&b.style_prompts));
    field("songs", json(&a.songs), json(&b.songs));
    field("viz scripts", json(&a.viz_scripts), json(&b.viz_scripts));
    field("revision counts", json(&original.revision_counts), json(&replayed.revision_counts));
    field("stall count", original.stall_count.to_string(), replayed.stall_count.to_string());
    field("crisis banner", original.crisis_banner.to_string(), replayed.crisis_banner.to_string());
    field("last decision", json(&original.last_decision), json(&replayed.last_decision));
    out
}
