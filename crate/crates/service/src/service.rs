use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use songwell_core::llm::ChatTurn;
use songwell_core::session::{write_transcript, Engine, FoldError, SessionState, TurnError, TurnFailure, TurnOutcome};
use songwell_core::viz::serialize_script;

use crate::store::{valid_id, Store, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("session `{0}` not found")]
    NotFound(String),
    #[error("song {index} not found in session `{id}`")]
    SongNotFound { id: String, index: usize },
    #[error("session `{0}` is busy with another turn")]
    Busy(String),
    #[error("{0}")]
    Rejected(TurnError),
    /// The turn failed after the user's message was saved; `state` is what is persisted now.
    #[error("turn failed: {error}")]
    TurnFailed { error: TurnError, state: Arc<SessionState> },
    #[error("could not open the session: {0}")]
    OpenFailed(TurnError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("session `{id}` cannot be rebuilt: {source}")]
    Fold {
        id: String,
        #[source]
        source: FoldError,
    },
}

/// The published result of a turn.
#[derive(Debug, Clone)]
pub struct TurnReply {
    pub id: String,
    pub state: Arc<SessionState>,
    pub reply: ChatTurn,
}

/// One live session: a turn lock and the last persisted state.
struct Slot {
    turn: Mutex<()>,
    snapshot: RwLock<Arc<SessionState>>,
}

/// Serializes turns per session and keeps the published state equal to the fold of the store.
/// Records are persisted before the state that includes them is published.
pub struct SessionService {
    engine: Arc<Engine>,
    store: Arc<dyn Store>,
    slots: RwLock<HashMap<String, Arc<Slot>>>,
    next_id: AtomicU64,
}

impl SessionService {
    pub fn new(engine: Arc<Engine>, store: Arc<dyn Store>) -> Result<Self, ServiceError> {
        let existing = store.ids()?.len() as u64;
        Ok(Self { engine, store, slots: RwLock::new(HashMap::new()), next_id: AtomicU64::new(existing + 1) })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn create(&self, user_name: &str) -> Result<TurnReply, ServiceError> {
        let outcome = self.engine.open_session(user_name).map_err(|f| {
            if f.error.is_rejection() {
                ServiceError::Rejected(f.error)
            } else {
                ServiceError::OpenFailed(f.error)
            }
        })?;
        let id = loop {
            let id = format!("s{:06}", self.next_id.fetch_add(1, Ordering::Relaxed));
            match self.store.create(&id, &outcome.records) {
                Ok(()) => break id,
                Err(StoreError::Exists(_)) => continue,
                Err(e) => return Err(e.into()),
            }
        };
        let state = Arc::new(outcome.state);
        let slot = Slot { turn: Mutex::new(()), snapshot: RwLock::new(state.clone()) };
        self.slots.write().insert(id.clone(), Arc::new(slot));
        tracing::info!(session = %id, "session opened");
        Ok(TurnReply { id, state, reply: outcome.reply })
    }

    /// The last published state.
    pub fn get(&self, id: &str) -> Result<Arc<SessionState>, ServiceError> {
        Ok(self.slot(id)?.snapshot.read().clone())
    }

    pub fn turn(&self, id: &str, text: &str) -> Result<TurnReply, ServiceError> {
        self.locked(id, |slot, current| {
            let (user, base) =
                self.engine.accept_user_turn(current, text).map_err(|f| ServiceError::Rejected(f.error))?;
            self.persist(id, slot, &[user], base.clone())?;
            self.finish(id, slot, self.engine.retry_pending(&base))
        })
    }

    /// Re-runs the reply for a saved user message whose turn failed.
    pub fn retry(&self, id: &str) -> Result<TurnReply, ServiceError> {
        self.locked(id, |slot, current| self.finish(id, slot, self.engine.retry_pending(current)))
    }

    pub fn end(&self, id: &str) -> Result<TurnReply, ServiceError> {
        self.locked(id, |slot, current| self.finish(id, slot, self.engine.end_session(current)))
    }

    /// The persisted records as canonical JSONL.
    pub fn transcript(&self, id: &str) -> Result<String, ServiceError> {
        if !valid_id(id) {
            return Err(ServiceError::NotFound(id.into()));
        }
        let records = self.store.load(id)?.ok_or_else(|| ServiceError::NotFound(id.into()))?;
        Ok(write_transcript(&records))
    }

    /// The canonical visualization document of the `index`-th song.
    pub fn viz(&self, id: &str, index: usize) -> Result<String, ServiceError> {
        let state = self.get(id)?;
        let script = state
            .artifacts
            .viz_scripts
            .get(index)
            .ok_or_else(|| ServiceError::SongNotFound { id: id.into(), index })?;
        Ok(serialize_script(script))
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ServiceError> {
        if let Some(slot) = self.slots.read().get(id) {
            return Ok(slot.clone());
        }
        if !valid_id(id) {
            return Err(ServiceError::NotFound(id.into()));
        }
        let mut slots = self.slots.write();
        if let Some(slot) = slots.get(id) {
            return Ok(slot.clone());
        }
        let records = self.store.load(id)?.ok_or_else(|| ServiceError::NotFound(id.into()))?;
        let state = self.engine.fold(&records).map_err(|source| ServiceError::Fold { id: id.into(), source })?;
        let slot = Arc::new(Slot { turn: Mutex::new(()), snapshot: RwLock::new(Arc::new(state)) });
        slots.insert(id.into(), slot.clone());
        Ok(slot)
    }

    /// Runs `f` holding the session's turn lock; a concurrent turn gets `Busy` at once.
    fn locked<T>(
        &self,
        id: &str,
        f: impl FnOnce(&Slot, &SessionState) -> Result<T, ServiceError>,
    ) -> Result<T, ServiceError> {
        let slot = self.slot(id)?;
        let _guard = slot.turn.try_lock().ok_or_else(|| ServiceError::Busy(id.into()))?;
        let current = slot.snapshot.read().clone();
        f(&slot, &current)
    }

    /// Appends then publishes. If the append fails the slot is dropped so the next
    /// access rebuilds from whatever the store actually holds.
    fn persist(
        &self,
        id: &str,
        slot: &Slot,
        records: &[songwell_core::session::Record],
        state: SessionState,
    ) -> Result<Arc<SessionState>, ServiceError> {
        if !records.is_empty() {
            if let Err(e) = self.store.append(id, records) {
                self.slots.write().remove(id);
                return Err(e.into());
            }
        }
        let state = Arc::new(state);
        *slot.snapshot.write() = state.clone();
        Ok(state)
    }

    fn finish(
        &self,
        id: &str,
        slot: &Slot,
        result: Result<TurnOutcome, TurnFailure>,
    ) -> Result<TurnReply, ServiceError> {
        match result {
            Ok(outcome) => {
                let state = self.persist(id, slot, &outcome.records, outcome.state)?;
                Ok(TurnReply { id: id.into(), state, reply: outcome.reply })
            }
            Err(failure) if failure.error.is_rejection() => Err(ServiceError::Rejected(failure.error)),
            Err(failure) => {
                let state = self.persist(id, slot, &failure.records, failure.state)?;
                Err(ServiceError::TurnFailed { error: failure.error, state })
            }
        }
    }
}
