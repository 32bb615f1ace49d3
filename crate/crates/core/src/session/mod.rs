//! Session records, the state they fold into, and the engine that produces them.

// A failed turn hands back the state it leaves behind; failures are rare, so it stays unboxed.
#![allow(clippy::result_large_err)]

mod engine;
mod fixture;
mod record;
mod state;

pub use engine::{Engine, EngineConfig, EngineParts, TurnError, TurnFailure, TurnOutcome};
pub use fixture::{PlayedSession, SessionFixture};
pub use record::{
    parse_transcript, write_transcript, ActionRecord, ExtractionOutcome, ExtractionRecord, Record, SessionHeader,
    TranscriptParseError, TransitionRecord, TurnRecord, TRANSCRIPT_VERSION,
};
pub use state::{Artifacts, FoldError, SessionState, SessionStatus};
