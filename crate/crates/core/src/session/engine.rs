use std::sync::Arc;

use super::record::{
    ActionRecord, ExtractionOutcome, ExtractionRecord, Record, SessionHeader, TransitionRecord, TurnRecord,
    TRANSCRIPT_VERSION,
};
use super::state::SessionState;
use crate::align::{align, transfer_timings, TimingError, TokenSequence};
use crate::dialogue::{
    next_transition, plan_transition, ActionId, ActionTrigger, Progress, Registry, RegistryError, TherapyState,
    TherapyStep, TransitionDecision, TransitionKind, TransitionPolicy, VariableId,
};
use crate::llm::{ChatBackend, ChatTurn, GatewayError, LlmGateway, RetryPolicy, Speaker, StepRef};
use crate::lyrics::LyricsDocument;
use crate::music::{
    build_style_prompt, ingest_features, request_song, AnalysisBackend, MockMusicBackend, MusicBackend,
    MusicComponents, MusicError, SongRequest,
};
use crate::prompt::{
    compose_composer_prompt, compose_dialogue_prompt, compose_extraction_prompt, compose_lyricist_prompt,
    CompositionError, ConfigError, DialogueInput, DialogueNote, ExtractionInput, PromptLibrary, DEFAULT_TURN_BUDGET,
};
use crate::viz::{compile, MoodStyleTable, VizError};
use crate::Scoring;

#[derive(Debug, Clone, Copy)]
pub struct EngineConfig {
    /// Most recent turns kept verbatim in the dialogue prompt.
    pub turn_budget: usize,
    /// Consecutive unproductive turns before the agent re-offers the question.
    pub stall_limit: u32,
    /// Revision rounds allowed per state.
    pub revision_cap: u32,
    pub scoring: Scoring,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { turn_budget: DEFAULT_TURN_BUDGET, stall_limit: 3, revision_cap: 3, scoring: Scoring::default() }
    }
}

/// The collaborators an engine is built from.
pub struct EngineParts {
    pub registry: Arc<Registry>,
    pub library: Arc<PromptLibrary>,
    pub moods: Arc<MoodStyleTable>,
    pub gateway: LlmGateway,
    pub music: Arc<dyn MusicBackend>,
    pub analysis: Arc<dyn AnalysisBackend>,
    pub config: EngineConfig,
}

impl EngineParts {
    /// Shipped configuration, the given chat backend, immediate retries and the mock music backend.
    pub fn shipped(chat: Arc<dyn ChatBackend>) -> Self {
        let mock = Arc::new(MockMusicBackend::default());
        Self {
            registry: Arc::new(Registry::shipped()),
            library: Arc::new(PromptLibrary::shipped()),
            moods: Arc::new(MoodStyleTable::shipped()),
            gateway: LlmGateway::new(chat).with_retry(RetryPolicy::immediate()),
            music: mock.clone(),
            analysis: mock,
            config: EngineConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TurnError {
    #[error("the session has ended")]
    Ended,
    #[error("message text is empty")]
    EmptyText,
    #[error("user name is empty")]
    EmptyName,
    #[error("the previous message is still waiting for a reply; retry it first")]
    AwaitingRetry,
    #[error("no message is waiting for a retry")]
    NothingToRetry,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error(transparent)]
    Music(#[from] MusicError),
    #[error(transparent)]
    Timing(#[from] TimingError),
    #[error(transparent)]
    Viz(#[from] VizError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

impl TurnError {
    /// The request itself was not acceptable in the session's current state.
    pub fn is_rejection(&self) -> bool {
        matches!(
            self,
            TurnError::Ended
                | TurnError::EmptyText
                | TurnError::EmptyName
                | TurnError::AwaitingRetry
                | TurnError::NothingToRetry
        )
    }
}

/// New records and the state after them.
#[derive(Debug, Clone)]
pub struct TurnOutcome {
    pub records: Vec<Record>,
    pub state: SessionState,
    pub reply: ChatTurn,
}

/// A failed turn. `records` holds what must still be persisted (the user's message, if new).
#[derive(Debug)]
pub struct TurnFailure {
    pub error: TurnError,
    pub records: Vec<Record>,
    pub state: SessionState,
}

/// Runs the turn loop: record the message, extract, decide, act, reply.
pub struct Engine {
    registry: Arc<Registry>,
    library: Arc<PromptLibrary>,
    moods: Arc<MoodStyleTable>,
    gateway: LlmGateway,
    music: Arc<dyn MusicBackend>,
    analysis: Arc<dyn AnalysisBackend>,
    config: EngineConfig,
}

impl Engine {
    pub fn new(parts: EngineParts) -> Result<Self, ConfigError> {
        parts.library.validate_for(&parts.registry)?;
        Ok(Self {
            registry: parts.registry,
            library: parts.library,
            moods: parts.moods,
            gateway: parts.gateway,
            music: parts.music,
            analysis: parts.analysis,
            config: parts.config,
        })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn library(&self) -> &PromptLibrary {
        &self.library
    }

    pub fn moods(&self) -> &MoodStyleTable {
        &self.moods
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn header(&self, user_name: &str) -> SessionHeader {
        SessionHeader {
            format: TRANSCRIPT_VERSION.to_string(),
            user_name: user_name.to_string(),
            registry_checksum: self.registry.checksum().to_string(),
            prompts_checksum: self.library.checksum().to_string(),
            moods_checksum: self.moods.checksum().to_string(),
        }
    }

    /// Rebuilds state from records with this engine's registry.
    pub fn fold(&self, records: &[Record]) -> Result<SessionState, super::FoldError> {
        SessionState::from_records(&self.registry, records)
    }

    /// Starts a session with the agent's opening turn. Nothing is persisted on failure.
    pub fn open_session(&self, user_name: &str) -> Result<TurnOutcome, TurnFailure> {
        let name = user_name.trim();
        let mut state = SessionState::new(&self.registry, self.header(name));
        if name.is_empty() {
            return Err(TurnFailure { error: TurnError::EmptyName, records: Vec::new(), state });
        }
        let mut record = match self.agent_turn(&state, &[]) {
            Ok(r) => r,
            Err(error) => return Err(TurnFailure { error, records: Vec::new(), state }),
        };
        record.header = Some(state.header.clone());
        let reply = record.turn.clone();
        let record = Record::Turn(record);
        state.apply(&record).expect("opening turn applies");
        Ok(TurnOutcome { records: vec![record], state, reply })
    }

    /// Handles one user message.
    pub fn process_user_turn(&self, state: &SessionState, text: &str) -> Result<TurnOutcome, TurnFailure> {
        let (user, base) = self.accept_user_turn(state, text)?;
        self.run_turn(base, vec![user])
    }

    /// Validates a user message and returns its record with the state after it. Callers that
    /// persist the message before the reply is produced finish the turn with `retry_pending`.
    pub fn accept_user_turn(&self, state: &SessionState, text: &str) -> Result<(Record, SessionState), TurnFailure> {
        let reject = |error| Err(TurnFailure { error, records: Vec::new(), state: state.clone() });
        if !state.is_active() {
            return reject(TurnError::Ended);
        }
        if state.awaiting_retry() {
            return reject(TurnError::AwaitingRetry);
        }
        let text = text.trim();
        if text.is_empty() {
            return reject(TurnError::EmptyText);
        }
        let user = Record::Turn(TurnRecord {
            header: None,
            turn: ChatTurn {
                index: state.history.len(),
                speaker: Speaker::User,
                text: text.to_string(),
                option_chips: Vec::new(),
                state_at: state.step_ref(),
            },
            prompt_digest: None,
            crisis_flag: self.gateway.crisis_lexicon().matches(text),
        });
        let mut base = state.clone();
        base.apply(&user).expect("user turn applies");
        Ok((user, base))
    }

    /// Re-runs the turn for a user message whose reply failed.
    pub fn retry_pending(&self, state: &SessionState) -> Result<TurnOutcome, TurnFailure> {
        if !state.awaiting_retry() {
            let error = if state.is_active() { TurnError::NothingToRetry } else { TurnError::Ended };
            return Err(TurnFailure { error, records: Vec::new(), state: state.clone() });
        }
        self.run_turn(state.clone(), Vec::new())
    }

    /// Ends the session at the user's request with a closing turn.
    pub fn end_session(&self, state: &SessionState) -> Result<TurnOutcome, TurnFailure> {
        if !state.is_active() {
            return Err(TurnFailure { error: TurnError::Ended, records: Vec::new(), state: state.clone() });
        }
        let decision =
            TransitionDecision { kind: TransitionKind::EndSession, reason: "ended by the user".into(), capped: false };
        let record = TransitionRecord {
            turn: state.history.len(),
            decision,
            from: state.step_ref(),
            to: state.step_ref(),
            reset: Vec::new(),
            revision_of: None,
            actions: Vec::new(),
        };
        let mut ws = state.clone();
        let record = Record::Transition(record);
        ws.apply(&record).expect("end transition applies");
        let fail = |error| TurnFailure { error, records: Vec::new(), state: state.clone() };
        let agent = self.agent_turn(&ws, &[DialogueNote::Closing]).map_err(fail)?;
        let reply = agent.turn.clone();
        let agent = Record::Turn(agent);
        ws.apply(&agent).expect("agent turn applies");
        Ok(TurnOutcome { records: vec![record, agent], state: ws, reply })
    }

    /// Everything after the user message. `base` already contains it; on failure only
    /// `persisted` survives.
    fn run_turn(&self, base: SessionState, persisted: Vec<Record>) -> Result<TurnOutcome, TurnFailure> {
        let mut ws = base.clone();
        let mut records = persisted.clone();
        match self.advance(&mut ws, &mut records) {
            Ok(reply) => Ok(TurnOutcome { records, state: ws, reply }),
            Err(error) => {
                tracing::warn!(%error, turn = base.history.len() - 1, "turn failed; keeping the user message only");
                Err(TurnFailure { error, records: persisted, state: base })
            }
        }
    }

    fn advance(&self, ws: &mut SessionState, records: &mut Vec<Record>) -> Result<ChatTurn, TurnError> {
        let user_index = ws.history.len() - 1;
        let step = self.registry.step(&ws.current_step)?.clone();

        if step.required.iter().any(|v| !ws.vars.is_filled(*v)) {
            let bundle = compose_extraction_prompt(
                ExtractionInput { history: &ws.history, step: &step, vars: &ws.vars },
                &self.library,
            )?;
            let outcome = match self.gateway.extract_variables(&bundle, &step, user_index) {
                Ok(r) => ExtractionOutcome::Applied {
                    values: r.values,
                    dropped_keys: r.dropped_keys,
                    rejected: r.rejected,
                    raw: r.raw_backend_text,
                },
                Err(GatewayError::ExtractionFailed { reason, raw }) => {
                    tracing::info!(%reason, turn = user_index, "extraction reply unusable; no variables change");
                    ExtractionOutcome::Failed { error: reason, raw: Some(raw) }
                }
                Err(e) => return Err(e.into()),
            };
            let record = Record::Extraction(ExtractionRecord {
                turn: user_index,
                step: ws.step_ref(),
                prompt_digest: bundle.digest(),
                outcome,
            });
            ws.apply(&record).map_err(TurnError::Generation)?;
            records.push(record);
        }

        let decision = next_transition(
            &self.registry,
            Progress { step: &ws.current_step, vars: &ws.vars, revisions: &ws.revision_counts },
            TransitionPolicy { revision_cap: self.config.revision_cap },
        )?;
        let plan = plan_transition(&self.registry, &ws.current_step, &decision.kind)?;
        let mut transition = TransitionRecord {
            turn: ws.history.len(),
            decision,
            from: ws.step_ref(),
            to: StepRef { state: plan.to_state, step: plan.to_step },
            reset: plan.reset,
            revision_of: plan.revision_of,
            actions: Vec::new(),
        };
        ws.apply_cursor(&transition);

        let kind = &transition.decision.kind;
        let mut due: Vec<(ActionId, &TherapyStep)> = Vec::new();
        if matches!(
            kind,
            TransitionKind::AdvanceStep { .. } | TransitionKind::AdvanceState { .. } | TransitionKind::EndSession
        ) {
            due.extend(step.actions_on(ActionTrigger::Complete).map(|a| (a, &step)));
        }
        if *kind != TransitionKind::Stay && *kind != TransitionKind::EndSession {
            let entered = self.registry.step(&transition.to.step)?;
            due.extend(entered.actions_on(ActionTrigger::Entry).map(|a| (a, entered)));
        }
        for (action, owner) in due {
            tracing::info!(?action, step = %owner.name, "running system action");
            let record = self.execute(action, owner, ws, user_index)?;
            ws.apply_action(&record);
            transition.actions.push(record);
        }

        let notes = self.notes(ws, &transition.decision);
        records.push(Record::Transition(transition));
        let agent = self.agent_turn(ws, &notes)?;
        let reply = agent.turn.clone();
        let agent = Record::Turn(agent);
        ws.apply(&agent).map_err(TurnError::Generation)?;
        records.push(agent);
        Ok(reply)
    }

    fn notes(&self, ws: &SessionState, decision: &TransitionDecision) -> Vec<DialogueNote> {
        let mut notes = Vec::new();
        if decision.kind == TransitionKind::EndSession {
            notes.push(DialogueNote::Closing);
        }
        if decision.capped {
            notes.push(DialogueNote::Capped);
        }
        if decision.kind == TransitionKind::Stay && ws.stall_count >= self.config.stall_limit {
            notes.push(DialogueNote::Reoffer);
        }
        let a = &ws.artifacts;
        match ws.current_state {
            TherapyState::MakingLyrics => {
                if let Some(lyrics) = a.lyrics_versions.last() {
                    notes.push(DialogueNote::Context(format!("Current lyrics:\n{}", lyrics.full_text)));
                }
            }
            TherapyState::SongDiscussion => {
                if let (Some(song), Some(lyrics)) = (a.songs.last(), a.lyrics_versions.last()) {
                    let title = song.title.as_deref().unwrap_or("untitled");
                    notes.push(DialogueNote::Context(format!(
                        "Current song: {title} ({})\nLyrics:\n{}",
                        song.style_echo, lyrics.full_text
                    )));
                }
            }
            _ => {}
        }
        notes
    }

    fn agent_turn(&self, ws: &SessionState, notes: &[DialogueNote]) -> Result<TurnRecord, TurnError> {
        let step = self.registry.step(&ws.current_step)?;
        let bundle = compose_dialogue_prompt(
            DialogueInput {
                user_name: ws.user_name(),
                history: &ws.history,
                step,
                vars: &ws.vars,
                notes,
                turn_budget: self.config.turn_budget,
            },
            &self.library,
        )?;
        let reply = self.gateway.complete_dialogue(&bundle, ws.history.len())?;
        Ok(TurnRecord {
            header: None,
            turn: reply.turn,
            prompt_digest: Some(bundle.digest()),
            crisis_flag: reply.crisis_flagged,
        })
    }

    fn execute(
        &self,
        action: ActionId,
        owner: &TherapyStep,
        ws: &SessionState,
        turn: usize,
    ) -> Result<ActionRecord, TurnError> {
        match action {
            ActionId::GenerateLyrics => {
                let previous = ws.artifacts.lyrics_versions.last();
                let bundle = compose_lyricist_prompt(owner, &ws.vars, previous, &self.library)?;
                let text = self.gateway.generate(&bundle, turn)?;
                let lyrics = LyricsDocument::parse_generated(&text)
                    .map_err(|e| TurnError::Generation(format!("lyrics: {e}")))?;
                Ok(ActionRecord::GenerateLyrics { lyrics })
            }
            ActionId::GenerateStylePrompt => {
                let bundle = compose_composer_prompt(owner, &ws.vars, &self.library)?;
                let text = self.gateway.generate(&bundle, turn)?;
                let components = MusicComponents::from_reply(&text)
                    .map_err(|e| TurnError::Generation(format!("music components: {e}")))?;
                let style = build_style_prompt(&components).map_err(|e| TurnError::Generation(e.to_string()))?;
                Ok(ActionRecord::GenerateStylePrompt { components, style })
            }
            ActionId::GenerateMusic => {
                let a = &ws.artifacts;
                let lyrics =
                    a.lyrics_versions.last().ok_or_else(|| TurnError::Generation("no lyrics to sing".into()))?;
                let style = a.style_prompts.last().ok_or_else(|| TurnError::Generation("no style prompt".into()))?;
                let title = ws.vars.value(VariableId::Title).and_then(|v| v.as_text());
                let request = SongRequest { lyrics, style, title, sequence: a.songs.len() };
                let song = request_song(self.music.as_ref(), &request)?;
                let raw = self.analysis.analyze(&song)?;
                let ingested = ingest_features::<f64>(&raw).map_err(MusicError::from)?;
                let mut warnings = ingested.warnings;
                if ingested.instrumental {
                    warnings.push("no transcript: lyrics are spread evenly over the song".into());
                }
                let features = ingested.features;
                let predicted =
                    TokenSequence::from_words(features.predicted_transcript.iter().map(|t| t.token.as_str()));
                let lyric_tokens = TokenSequence::from_words(lyrics.words());
                let path = align(&predicted, &lyric_tokens, &self.config.scoring);
                let timed = transfer_timings(
                    &path,
                    &features.predicted_transcript,
                    &predicted,
                    &lyric_tokens,
                    song.duration_ms,
                )?;
                let compiled = compile(&timed, &features, &self.moods, song.duration_ms)?;
                warnings.extend(compiled.warnings);
                for w in &warnings {
                    tracing::warn!(song = %song.song_id, "{w}");
                }
                Ok(ActionRecord::GenerateMusic { song, viz_script: compiled.script, warnings })
            }
        }
    }
}
