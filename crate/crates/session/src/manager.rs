use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::Duration;

use cmaesig_core::rng::derive_seed;
use cmaesig_core::Algorithm;

use crate::session::{Session, DEFAULT_K};
use crate::SessionError;

#[derive(Clone, Debug)]
pub struct ManagerConfig {
    /// Directory for per-session event logs; `None` keeps logs in memory only.
    pub log_dir: Option<PathBuf>,
    /// Idle time after which a session becomes read-only.
    pub timeout: Duration,
    pub default_algorithm: Algorithm,
    /// Fixes session seeds for reproducible runs; otherwise seeds are random.
    pub seed: Option<u64>,
}

impl Default for ManagerConfig {
    fn default() -> Self {
        Self {
            log_dir: None,
            timeout: Duration::from_secs(24 * 3600),
            default_algorithm: Algorithm::Cmaesig,
            seed: None,
        }
    }
}

/// All live sessions. Each session sits behind its own mutex, so requests to
/// one session are serialized while different sessions proceed independently.
#[derive(Debug, Default)]
pub struct SessionManager {
    config: ManagerConfig,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    created: AtomicU64,
}

pub type SessionGuard<'a> = MutexGuard<'a, Session>;

impl SessionManager {
    pub fn new(config: ManagerConfig) -> Self {
        Self {
            config,
            sessions: RwLock::default(),
            created: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> &ManagerConfig {
        &self.config
    }

    /// Creates a session and returns its id.
    pub fn create(&self, algorithm: Option<&str>, k: Option<usize>) -> Result<String, SessionError> {
        let algorithm = match algorithm {
            Some(name) => name
                .parse::<Algorithm>()
                .map_err(|_| SessionError::UnknownAlgorithm(name.to_owned()))?,
            None => self.config.default_algorithm,
        };
        let n = self.created.fetch_add(1, Ordering::Relaxed);
        let seed = match self.config.seed {
            Some(master) => derive_seed(master, &[n]),
            None => rand::random(),
        };
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Session::create(
            id.clone(),
            algorithm,
            k.unwrap_or(DEFAULT_K),
            seed,
            self.config.timeout,
            self.config.log_dir.as_deref(),
        )?;
        log::info!("session {id} created ({algorithm}, seed {seed})");
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(id.to_owned()))
    }

    /// Runs `f` with exclusive access to one session.
    pub fn with<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T, SessionError>) -> Result<T, SessionError> {
        let session = self.get(id)?;
        let mut guard = session.lock().unwrap_or_else(|e| e.into_inner());
        f(&mut guard)
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
