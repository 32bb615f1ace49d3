//! HTTP API, append-only session storage and transcript replay for the songwriting engine.

pub mod config;
pub mod http;
pub mod replay;
pub mod service;
pub mod store;

pub use config::{load_script, BackendKind, EngineArgs};
pub use replay::{diff_states, replay, ReplayError, ReplayReport};
pub use service::{ServiceError, SessionService, TurnReply};
pub use store::{FileStore, MemoryStore, Store, StoreError};
