use std::collections::HashMap;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;

use cmaesig_core::rng::{derive_seed, seeded, SimRng};
use cmaesig_core::{
    reward, Algorithm, BeliefSnapshot, Domain, FeatureVector, GeneratorConfig, ItemId, Learner, LearnerConfig, Query,
    PreferenceVector, QueryItem, Ranking,
};

use crate::events::{Event, EventFile};
use crate::face::{FaceParams, FACE_DIM};
use crate::SessionError;

/// Candidates scanned for the predicted-best item.
pub const BEST_POOL_SIZE: usize = 1000;
pub const DEFAULT_K: usize = 3;

const STREAM_LEARNER: u64 = 0;
const STREAM_POOL: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItemView {
    pub id: ItemId,
    pub phi: Vec<f64>,
    pub face: FaceParams,
}

impl ItemView {
    fn of(item: &QueryItem) -> Self {
        Self {
            id: item.id.clone(),
            phi: item.phi.as_slice().to_vec(),
            face: FaceParams::from_features(&item.phi),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryView {
    pub items: Vec<ItemView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub favorite: Option<ItemView>,
    pub iteration: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestView {
    pub item: ItemView,
    /// Set until the first ranking arrives.
    pub low_confidence: bool,
}

/// One live preference-elicitation session over the face domain.
#[derive(Debug)]
pub struct Session {
    id: String,
    algorithm: Algorithm,
    k: usize,
    seed: u64,
    learner: Learner,
    rng: SimRng,
    pool: Vec<FeatureVector>,
    pending: Option<Query>,
    /// Every item served so far, by id.
    shown: HashMap<ItemId, FeatureVector>,
    favorite: Option<QueryItem>,
    iteration: u64,
    /// Idempotency key -> iteration count acknowledged for it.
    receipts: HashMap<String, u64>,
    events: Vec<Event>,
    file: Option<EventFile>,
    last_active: Instant,
    timeout: Duration,
}

impl Session {
    /// Starts a session. With `log_dir`, events are also appended to
    /// `<log_dir>/<id>.jsonl`.
    pub fn create(
        id: String,
        algorithm: Algorithm,
        k: usize,
        seed: u64,
        timeout: Duration,
        log_dir: Option<&Path>,
    ) -> Result<Self, SessionError> {
        let config = LearnerConfig {
            generator: GeneratorConfig {
                k,
                domain: Domain::Hypercube,
                ..GeneratorConfig::default()
            },
            ..LearnerConfig::new(algorithm)
        };
        config
            .validate()
            .map_err(|e| SessionError::InvalidRequest(e.to_string()))?;
        let mut rng = seeded(derive_seed(seed, &[STREAM_LEARNER]));
        let learner = Learner::new(FACE_DIM, config, &mut rng)?;
        let pool = Domain::Hypercube.sample(FACE_DIM, BEST_POOL_SIZE, &mut seeded(derive_seed(seed, &[STREAM_POOL])));
        let file = log_dir.map(|dir| EventFile::create(dir, &id)).transpose()?;
        let mut session = Self {
            id: id.clone(),
            algorithm,
            k,
            seed,
            learner,
            rng,
            pool,
            pending: None,
            shown: HashMap::new(),
            favorite: None,
            iteration: 0,
            receipts: HashMap::new(),
            events: Vec::new(),
            file,
            last_active: Instant::now(),
            timeout,
        };
        session.record(Event::SessionCreated {
            session_id: id,
            algorithm,
            k,
            seed,
        })?;
        Ok(session)
    }

    /// Rebuilds a session by re-running a logged event stream through a fresh
    /// session with the same seed. Fails if a regenerated query or a belief
    /// snapshot differs from the log.
    pub fn replay(events: &[Event]) -> Result<Self, SessionError> {
        let Some(Event::SessionCreated {
            session_id,
            algorithm,
            k,
            seed,
        }) = events.first()
        else {
            return Err(SessionError::Replay("log must start with session_created".into()));
        };
        let mut s = Self::create(session_id.clone(), *algorithm, *k, *seed, Duration::MAX, None)?;
        for (n, event) in events.iter().enumerate().skip(1) {
            let diverged = |what: &str| SessionError::Replay(format!("event {n}: {what} differs from the log"));
            match event {
                Event::SessionCreated { .. } => return Err(SessionError::Replay(format!("event {n}: second session_created"))),
                Event::QueryIssued { query, .. } => {
                    let view = s.next_query()?;
                    if view.items.iter().map(|it| &it.id).ne(query.items().iter().map(|it| &it.id)) {
                        return Err(diverged("query"));
                    }
                }
                Event::RankingReceived {
                    order, idempotency_key, ..
                } => {
                    s.submit_ranking(order.clone(), idempotency_key.clone())?;
                }
                Event::FavoriteSet { item } => {
                    s.shown.insert(item.id.clone(), item.phi.clone());
                    s.set_favorite(&item.id)?;
                }
                Event::Snapshot { belief, .. } => {
                    if s.belief_snapshot() != *belief {
                        return Err(diverged("belief snapshot"));
                    }
                }
            }
        }
        Ok(s)
    }

    fn record(&mut self, event: Event) -> Result<(), SessionError> {
        if let Some(file) = &mut self.file {
            file.append(&event)?;
        }
        self.events.push(event);
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn pending(&self) -> Option<&Query> {
        self.pending.as_ref()
    }

    pub fn favorite(&self) -> Option<&QueryItem> {
        self.favorite.as_ref()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn belief_snapshot(&self) -> BeliefSnapshot {
        self.learner.belief().snapshot()
    }

    /// Expired sessions stay readable but reject changes.
    pub fn is_expired(&self) -> bool {
        self.last_active.elapsed() > self.timeout
    }

    fn touch(&mut self) -> Result<(), SessionError> {
        if self.is_expired() {
            return Err(SessionError::Expired(self.id.clone()));
        }
        self.last_active = Instant::now();
        Ok(())
    }

    fn view(&self, query: &Query) -> QueryView {
        QueryView {
            items: query.items().iter().map(ItemView::of).collect(),
            favorite: self.favorite.as_ref().map(ItemView::of),
            iteration: self.iteration,
        }
    }

    /// The pending query, generating one if none is pending.
    pub fn next_query(&mut self) -> Result<QueryView, SessionError> {
        if let Some(q) = &self.pending {
            return Ok(self.view(q));
        }
        self.touch()?;
        let query = self.learner.next_query(&mut self.rng)?;
        for item in query.items() {
            self.shown.insert(item.id.clone(), item.phi.clone());
        }
        self.record(Event::QueryIssued {
            iteration: self.iteration,
            query: query.clone(),
        })?;
        let view = self.view(&query);
        self.pending = Some(query);
        Ok(view)
    }

    /// Applies a most-preferred-first ranking of the pending query. A repeated
    /// idempotency key returns the original acknowledgment without reapplying.
    pub fn submit_ranking(&mut self, order: Vec<ItemId>, idempotency_key: Option<String>) -> Result<u64, SessionError> {
        if let Some(done) = idempotency_key.as_ref().and_then(|k| self.receipts.get(k)) {
            return Ok(*done);
        }
        self.touch()?;
        let Some(pending) = &self.pending else {
            return Err(SessionError::Conflict {
                message: "no query is pending".into(),
                expected: vec![],
            });
        };
        let ranking = Ranking::new(order.clone());
        if ranking.indices_in(pending).is_err() {
            return Err(SessionError::Conflict {
                message: "ranking must order exactly the pending query's items".into(),
                expected: pending.ids(),
            });
        }
        self.learner.observe(pending, &ranking)?;
        self.pending = None;
        self.iteration += 1;
        if let Some(key) = &idempotency_key {
            self.receipts.insert(key.clone(), self.iteration);
        }
        self.record(Event::RankingReceived {
            iteration: self.iteration,
            order,
            idempotency_key,
        })?;
        self.record(Event::Snapshot {
            iteration: self.iteration,
            belief: self.belief_snapshot(),
            search: self.learner.search().map(|s| s.snapshot()),
        })?;
        Ok(self.iteration)
    }

    fn best_in_pool(&self, estimate: &PreferenceVector) -> usize {
        let mut best = 0;
        let mut best_reward = f64::NEG_INFINITY;
        for (i, phi) in self.pool.iter().enumerate() {
            let r = reward(estimate, phi).expect("pool matches the belief dimension");
            if r > best_reward {
                best_reward = r;
                best = i;
            }
        }
        best
    }

    /// Pool item maximizing the estimated reward. Deterministic while the
    /// belief is unchanged.
    pub fn predicted_best(&mut self) -> BestView {
        let best = self.best_in_pool(&self.learner.map_estimate());
        let item = QueryItem::new(format!("best-{best:04}").as_str(), self.pool[best].clone());
        self.shown.insert(item.id.clone(), item.phi.clone());
        BestView {
            item: ItemView::of(&item),
            low_confidence: self.iteration == 0,
        }
    }

    /// Marks a previously served item as the favorite, replacing any earlier one.
    pub fn set_favorite(&mut self, item_id: &ItemId) -> Result<ItemView, SessionError> {
        let phi = self
            .shown
            .get(item_id)
            .ok_or_else(|| SessionError::UnknownItem(item_id.clone()))?
            .clone();
        self.touch()?;
        let item = QueryItem::new(item_id.clone(), phi);
        self.record(Event::FavoriteSet { item: item.clone() })?;
        let view = ItemView::of(&item);
        self.favorite = Some(item);
        Ok(view)
    }

    /// The event log as JSON lines.
    pub fn log_lines(&self) -> String {
        self.events.iter().map(|e| e.to_line() + "\n").collect()
    }
}
