//! Append-only JSON-lines event log, one file per session.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cmaesig_core::{Algorithm, BeliefSnapshot, ItemId, Query, QueryItem, SearchSnapshot};

use crate::SessionError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        session_id: String,
        algorithm: Algorithm,
        k: usize,
        seed: u64,
    },
    QueryIssued {
        iteration: u64,
        query: Query,
    },
    RankingReceived {
        /// Iteration count after the ranking was applied.
        iteration: u64,
        order: Vec<ItemId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        idempotency_key: Option<String>,
    },
    FavoriteSet {
        item: QueryItem,
    },
    Snapshot {
        iteration: u64,
        belief: BeliefSnapshot,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        search: Option<SearchSnapshot>,
    },
}

impl Event {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("events always serialize")
    }

    /// Parses a JSON-lines stream, skipping blank lines.
    pub fn parse_lines<R: BufRead>(reader: R) -> Result<Vec<Event>, SessionError> {
        let mut events = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(SessionError::Io)?;
            if line.trim().is_empty() {
                continue;
            }
            let event = serde_json::from_str(&line)
                .map_err(|e| SessionError::Replay(format!("line {}: {e}", n + 1)))?;
            events.push(event);
        }
        Ok(events)
    }
}

/// Writes events to `<dir>/<session_id>.jsonl` as they happen.
#[derive(Debug)]
pub struct EventFile {
    path: PathBuf,
    file: File,
}

impl EventFile {
    pub fn create(dir: &Path, session_id: &str) -> Result<Self, SessionError> {
        std::fs::create_dir_all(dir).map_err(SessionError::Io)?;
        let path = dir.join(format!("{session_id}.jsonl"));
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(SessionError::Io)?;
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &Event) -> Result<(), SessionError> {
        let mut line = event.to_line();
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(SessionError::Io)?;
        self.file.flush().map_err(SessionError::Io)
    }
}
