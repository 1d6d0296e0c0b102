//! Preference learning from rankings, and the three ranking-query generators
//! that drive it: Infogain, CMA-ES, and CMA-ES-IG.
//!
//! The building blocks are layered bottom-up:
//!
//! - [`types`]: feature/preference vectors, queries and rankings, the linear reward.
//! - [`choice`]: Luce-Shepard selection and Plackett-Luce ranking probabilities,
//!   plus a noisily-rational simulated ranker.
//! - [`belief`]: a particle posterior over preference vectors with Bayesian updates.
//! - [`cmaes`]: an ask/tell CMA-ES driven purely by ordinal feedback.
//! - [`domain`]: feature-space domains (unit ball, hypercube, fixed datasets) and projection.
//! - [`querygen`]: information gain, k-means quantization and the query generators.
//! - [`metrics`]: alignment, regret, quality and normalized trapezoidal AUC.
//! - [`learner`]: the generate/rank/update loop shared by the benchmark and the live service.

pub mod belief;
pub mod choice;
pub mod cmaes;
pub mod domain;
pub mod error;
pub mod learner;
pub mod metrics;
pub mod querygen;
pub mod rng;
pub mod types;

pub use belief::{BeliefConfig, BeliefSnapshot, PreferenceBelief};
pub use choice::RationalityConfig;
pub use cmaes::{SearchSnapshot, SearchState, StrategyParams};
pub use domain::Domain;
pub use error::{Error, Result};
pub use learner::{Learner, LearnerConfig};
pub use querygen::{Algorithm, EstimateSource, GeneratorConfig, InfoGainOptions, InfoGainVariant, TellSource};
pub use types::{reward, FeatureVector, ItemId, PreferenceVector, Query, QueryItem, Ranking};
