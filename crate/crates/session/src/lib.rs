//! Live ranking sessions over a four-parameter face domain.
//!
//! A session serves `K` candidate faces at a time, accepts the user's ranking,
//! updates its learner, and can report the face it currently predicts the user
//! likes best. Every change is appended to a JSON-lines event log from which
//! the session can be replayed exactly.

pub mod api;
pub mod events;
pub mod face;
pub mod manager;
pub mod session;

use cmaesig_core::ItemId;

pub use api::router;
pub use events::Event;
pub use face::FaceParams;
pub use manager::{ManagerConfig, SessionManager};
pub use session::{BestView, ItemView, QueryView, Session};

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no session {0}")]
    NotFound(String),
    #[error("item {0} was never shown in this session")]
    UnknownItem(ItemId),
    #[error("{message}")]
    Conflict { message: String, expected: Vec<ItemId> },
    #[error("session {0} has expired and is read-only")]
    Expired(String),
    #[error("replay failed: {0}")]
    Replay(String),
    #[error(transparent)]
    Model(#[from] cmaesig_core::Error),
    #[error("event log: {0}")]
    Io(#[source] std::io::Error),
}
