//! The generate / rank / update loop around one user.

use rand::Rng;

use crate::belief::{BeliefConfig, PreferenceBelief};
use crate::cmaes::SearchState;
use crate::error::{invalid, Result};
use crate::querygen::{
    gen_cmaes, gen_cmaesig_detailed, gen_infogain_with, Algorithm, GeneratorConfig, QuantizedQuery, TellSource,
};
use crate::types::{FeatureVector, PreferenceVector, Query, Ranking};

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub generator: GeneratorConfig,
    pub belief: BeliefConfig,
    /// Initial CMA-ES step size.
    pub sigma0: f64,
}

impl LearnerConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            generator: GeneratorConfig::default(),
            belief: BeliefConfig::default(),
            sigma0: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.belief.validate()?;
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return invalid(format!("sigma0 must be positive and finite, got {}", self.sigma0));
        }
        Ok(())
    }
}

/// Holds the preference belief (always) and the CMA-ES search state (for the
/// CMA-ES variants). Every query is generated from the current state, and every
/// observed ranking updates the belief and, where present, the search state.
#[derive(Clone, Debug)]
pub struct Learner {
    config: LearnerConfig,
    belief: PreferenceBelief,
    search: Option<SearchState>,
    last_draw: Option<QuantizedQuery>,
}

impl Learner {
    pub fn new<R: Rng + ?Sized>(dim: usize, config: LearnerConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let belief = PreferenceBelief::init_prior(dim, config.belief.clone(), rng)?;
        let search = if config.algorithm.uses_search_state() {
            Some(SearchState::init(dim, config.sigma0, None)?.with_population(config.generator.k)?)
        } else {
            None
        };
        Ok(Self {
            config,
            belief,
            search,
            last_draw: None,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.belief.dim()
    }

    pub fn belief(&self) -> &PreferenceBelief {
        &self.belief
    }

    pub fn search(&self) -> Option<&SearchState> {
        self.search.as_ref()
    }

    pub fn map_estimate(&self) -> PreferenceVector {
        self.belief.map_estimate()
    }

    pub fn next_query<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Query> {
        let gen = &self.config.generator;
        match self.config.algorithm {
            Algorithm::Infogain => gen_infogain_with(&self.belief, gen, rng),
            Algorithm::Cmaes => gen_cmaes(self.search_state()?, gen.k, rng, &gen.domain),
            Algorithm::Cmaesig => {
                let draw = gen_cmaesig_detailed(self.search_state()?, gen.k, gen.d_samples, rng, &gen.domain)?;
                let query = draw.query.clone();
                self.last_draw = Some(draw);
                Ok(query)
            }
        }
    }

    /// Applies a ranking of `query`. On error the learner is left unchanged.
    pub fn observe(&mut self, query: &Query, ranking: &Ranking) -> Result<()> {
        let order = ranking.indices_in(query)?;
        let belief = self.belief.clone().update(query, ranking)?;
        let search = match &self.search {
            Some(state) => {
                let ranked = self.tell_population(query, &order);
                Some(state.clone().tell(&ranked)?)
            }
            None => None,
        };
        self.belief = belief;
        self.search = search;
        self.last_draw = None;
        Ok(())
    }

    fn search_state(&self) -> Result<&SearchState> {
        match &self.search {
            Some(s) => Ok(s),
            None => invalid(format!("{} has no search state", self.config.algorithm)),
        }
    }

    /// Best-first population handed to `tell`.
    fn tell_population(&self, query: &Query, order: &[usize]) -> Vec<FeatureVector> {
        if self.config.generator.tell_source == TellSource::ClusterMembers {
            if let Some(draw) = self.last_draw.as_ref().filter(|d| d.query.ids() == query.ids()) {
                let mut rank_of = vec![0; order.len()];
                for (rank, &item) in order.iter().enumerate() {
                    rank_of[item] = rank;
                }
                let mut members: Vec<(usize, &FeatureVector)> = draw
                    .labels
                    .iter()
                    .zip(&draw.samples)
                    .map(|(&label, x)| (rank_of[label], x))
                    .collect();
                members.sort_by_key(|(rank, _)| *rank);
                return members.into_iter().map(|(_, x)| x.clone()).collect();
            }
            log::warn!("no matching cluster draw for this query; telling with the query items");
        }
        order.iter().map(|&i| query.items()[i].phi.clone()).collect()
    }
}
