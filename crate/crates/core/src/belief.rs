//! Weighted-particle posterior over preference vectors.
//!
//! Particles live in the closed unit ball. Each observed ranking multiplies the
//! particle weights by its Plackett-Luce likelihood (rationality fixed at 1),
//! computed in log space. When the effective sample size drops below a fraction
//! of the particle count the set is systematically resampled, jittered with
//! Gaussian noise and pulled back into the ball.
//!
//! Resampling randomness comes from a seed stored in the belief itself, so
//! [`PreferenceBelief::update`] is a deterministic function of its inputs.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::choice::{log_plackett_luce, log_sum_exp};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, seeded, uniform_ball};
use crate::types::{dot, PreferenceVector, Query, Ranking};

/// Rationality used inside the belief likelihood.
pub const LIKELIHOOD_BETA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeliefConfig {
    pub n_particles: usize,
    /// Per-coordinate standard deviation of the post-resampling jitter.
    pub jitter_std: f64,
    pub resample: bool,
    /// Resample when `N_eff < ess_fraction * N`.
    pub ess_fraction: f64,
}

impl Default for BeliefConfig {
    fn default() -> Self {
        Self {
            n_particles: 1000,
            jitter_std: 0.05,
            resample: true,
            ess_fraction: 0.5,
        }
    }
}

impl BeliefConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return invalid(format!("belief needs at least 2 particles, got {}", self.n_particles));
        }
        if !(self.jitter_std.is_finite() && self.jitter_std >= 0.0) {
            return invalid(format!("jitter std must be finite and >= 0, got {}", self.jitter_std));
        }
        if !(0.0..=1.0).contains(&self.ess_fraction) {
            return invalid(format!("ess fraction must lie in [0, 1], got {}", self.ess_fraction));
        }
        Ok(())
    }
}

/// JSON form of a belief for session logs: `{d, particles, log_weights}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefSnapshot {
    pub d: usize,
    pub particles: Vec<Vec<f64>>,
    pub log_weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PreferenceBelief {
    dim: usize,
    particles: Vec<PreferenceVector>,
    /// Normalized: `log_sum_exp(log_weights) == 0`.
    log_weights: Vec<f64>,
    config: BeliefConfig,
    seed: u64,
    resamplings: u64,
}

impl PreferenceBelief {
    /// Uniform prior over the unit ball.
    pub fn init_prior<R: Rng + ?Sized>(dim: usize, config: BeliefConfig, rng: &mut R) -> Result<Self> {
        if dim == 0 {
            return invalid("belief dimension must be >= 1");
        }
        config.validate()?;
        let particles = (0..config.n_particles)
            .map(|_| PreferenceVector::from_raw(uniform_ball(dim, rng)))
            .collect();
        let seed = rng.random::<u64>();
        let log_w = -(config.n_particles as f64).ln();
        Ok(Self {
            dim,
            particles,
            log_weights: vec![log_w; config.n_particles],
            config,
            seed,
            resamplings: 0,
        })
    }

    /// Builds a belief from explicit particles and (unnormalized) log weights.
    /// `config.n_particles` is ignored in favor of `particles.len()`.
    pub fn from_particles(
        particles: Vec<PreferenceVector>,
        log_weights: Vec<f64>,
        config: BeliefConfig,
        seed: u64,
    ) -> Result<Self> {
        let config = BeliefConfig {
            n_particles: particles.len(),
            ..config
        };
        config.validate()?;
        if log_weights.len() != particles.len() {
            return invalid(format!(
                "{} particles but {} log weights",
                particles.len(),
                log_weights.len()
            ));
        }
        let dim = particles[0].dim();
        if particles.iter().any(|p| p.dim() != dim) {
            return invalid("particles have inconsistent dimensions");
        }
        if let Some(p) = particles.iter().find(|p| p.norm() > 1.0 + 1e-9) {
            return invalid(format!("particle outside the unit ball (norm {})", p.norm()));
        }
        let mut belief = Self {
            dim,
            particles,
            log_weights,
            config,
            seed,
            resamplings: 0,
        };
        belief.normalize()?;
        Ok(belief)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[PreferenceVector] {
        &self.particles
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn config(&self) -> &BeliefConfig {
        &self.config
    }

    /// Normalized weights.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    /// `1 / sum w_i^2`.
    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.log_weights.iter().map(|lw| (2.0 * lw).exp()).sum::<f64>()
    }

    fn normalize(&mut self) -> Result<()> {
        let total = log_sum_exp(&self.log_weights);
        if !total.is_finite() {
            return Err(Error::Internal(format!(
                "belief weights degenerated (log normalizer {total})"
            )));
        }
        for lw in &mut self.log_weights {
            *lw -= total;
        }
        Ok(())
    }

    /// Bayes update with one observed ranking of `query`.
    pub fn update(mut self, query: &Query, ranking: &Ranking) -> Result<Self> {
        if query.dim() != self.dim {
            return invalid(format!(
                "query dimension {} does not match belief dimension {}",
                query.dim(),
                self.dim
            ));
        }
        let order = ranking.indices_in(query)?;
        let mut rewards = vec![0.0; query.len()];
        for (particle, lw) in self.particles.iter().zip(self.log_weights.iter_mut()) {
            for (r, item) in rewards.iter_mut().zip(query.items()) {
                *r = dot(particle.as_slice(), item.phi.as_slice());
            }
            *lw += log_plackett_luce(&rewards, &order, LIKELIHOOD_BETA);
        }
        self.normalize()?;
        if self.config.resample
            && self.effective_sample_size() < self.config.ess_fraction * self.len() as f64
        {
            self.resample();
        }
        Ok(self)
    }

    /// Systematic resampling followed by jitter and re-projection into the ball.
    fn resample(&mut self) {
        let mut rng = seeded(derive_seed(self.seed, &[self.resamplings]));
        self.resamplings += 1;
        let n = self.len();
        let weights = self.weights();
        let step = 1.0 / n as f64;
        let mut u = rng.random::<f64>() * step;
        let mut cumulative = weights[0];
        let mut src = 0;
        let mut picked = Vec::with_capacity(n);
        for _ in 0..n {
            while u > cumulative && src < n - 1 {
                src += 1;
                cumulative += weights[src];
            }
            picked.push(src);
            u += step;
        }
        let jitter = Normal::new(0.0, self.config.jitter_std).expect("validated jitter std");
        self.particles = picked
            .into_iter()
            .map(|i| {
                let moved = self.particles[i]
                    .as_slice()
                    .iter()
                    .map(|x| x + jitter.sample(&mut rng))
                    .collect();
                PreferenceVector::from_raw(moved).clamped_to_unit_ball()
            })
            .collect();
        self.log_weights = vec![-(n as f64).ln(); n];
    }

    /// Point estimate used by the generators and metrics: the weighted particle
    /// mean, rescaled into the unit ball if needed.
    pub fn map_estimate(&self) -> PreferenceVector {
        let mut mean = vec![0.0; self.dim];
        for (p, lw) in self.particles.iter().zip(&self.log_weights) {
            let w = lw.exp();
            for (m, x) in mean.iter_mut().zip(p.as_slice()) {
                *m += w * x;
            }
        }
        PreferenceVector::from_raw(mean).clamped_to_unit_ball()
    }

    pub fn snapshot(&self) -> BeliefSnapshot {
        BeliefSnapshot {
            d: self.dim,
            particles: self.particles.iter().map(|p| p.as_slice().to_vec()).collect(),
            log_weights: self.log_weights.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::types::{FeatureVector, QueryItem};
    use approx::assert_abs_diff_eq;

    fn pv(v: &[f64]) -> PreferenceVector {
        PreferenceVector::new(v.to_vec()).unwrap()
    }

    fn query(points: &[&[f64]]) -> Query {
        Query::new(
            points
                .iter()
                .enumerate()
                .map(|(i, p)| QueryItem::new(format!("i{i}").as_str(), FeatureVector::new(p.to_vec()).unwrap()))
                .collect(),
        )
        .unwrap()
    }

    fn fixed(particles: &[&[f64]], weights: &[f64]) -> PreferenceBelief {
        let cfg = BeliefConfig { resample: false, ..Default::default() };
        PreferenceBelief::from_particles(
            particles.iter().map(|p| pv(p)).collect(),
            weights.iter().map(|w| w.ln()).collect(),
            cfg,
            0,
        )
        .unwrap()
    }

    #[test]
    fn prior_construction() {
        let b = PreferenceBelief::init_prior(4, BeliefConfig::default(), &mut seeded(1)).unwrap();
        assert_eq!(b.len(), 1000);
        assert!(b.particles().iter().all(|p| p.norm() <= 1.0 + 1e-12));
        for w in b.weights() {
            assert_abs_diff_eq!(w, 1e-3, epsilon = 1e-15);
        }
        let again = PreferenceBelief::init_prior(4, BeliefConfig::default(), &mut seeded(1)).unwrap();
        assert_eq!(b.snapshot(), again.snapshot());
        assert!(PreferenceBelief::init_prior(0, BeliefConfig::default(), &mut seeded(1)).is_err());
        let tiny = BeliefConfig { n_particles: 1, ..Default::default() };
        assert!(PreferenceBelief::init_prior(3, tiny, &mut seeded(1)).is_err());
    }

    #[test]
    fn prior_norm_moment() {
        let cfg = BeliefConfig { n_particles: 100_000, ..Default::default() };
        let b = PreferenceBelief::init_prior(4, cfg, &mut seeded(5)).unwrap();
        let mean_norm = b.particles().iter().map(|p| p.norm()).sum::<f64>() / b.len() as f64;
        // E||U|| = d / (d + 1) for U uniform in the d-ball.
        assert!((mean_norm - 0.8).abs() < 0.02, "{mean_norm}");
        assert!(b.map_estimate().norm() < 0.05);
    }

    #[test]
    fn constant_likelihood_leaves_weights() {
        let b = fixed(&[&[0.5, 0.1], &[-0.3, 0.2], &[0.0, -0.9]], &[0.2, 0.3, 0.5]);
        let before = b.weights();
        let q = query(&[&[0.4, 0.4], &[0.4, 0.4], &[0.4, 0.4]]);
        let r = Ranking::from_indices(&q, &[2, 0, 1]).unwrap();
        let after = b.update(&q, &r).unwrap().weights();
        for (x, y) in before.iter().zip(&after) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_particle_posterior() {
        let sigma = |z: f64| 1.0 / (1.0 + (-z).exp());
        let mut b = fixed(&[&[1.0, 0.0], &[-1.0, 0.0]], &[0.5, 0.5]);
        let q = query(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let r = Ranking::from_indices(&q, &[0, 1]).unwrap();
        let mut last = 0.5;
        for t in 1..=8 {
            b = b.update(&q, &r).unwrap();
            let w = b.weights()[0];
            let expected = sigma(2.0).powi(t) / (sigma(2.0).powi(t) + sigma(-2.0).powi(t));
            assert_abs_diff_eq!(w, expected, epsilon = 1e-12);
            if t == 1 {
                assert_abs_diff_eq!(w, 0.8808, epsilon = 1e-4);
            }
            assert!(w > last);
            last = w;
        }
    }

    #[test]
    fn map_estimate_examples() {
        let b = fixed(&[&[0.3, -0.2], &[0.3, -0.2], &[0.3, -0.2]], &[0.1, 0.6, 0.3]);
        let m = b.map_estimate();
        assert_abs_diff_eq!(m.as_slice()[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(m.as_slice()[1], -0.2, epsilon = 1e-15);

        let b = fixed(&[&[1.0, 0.0], &[-1.0, 0.0]], &[0.9, 0.1]);
        let m = b.map_estimate();
        assert_abs_diff_eq!(m.as_slice()[0], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(m.as_slice()[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let b = fixed(&[&[1.0, 0.0], &[-1.0, 0.0]], &[0.5, 0.5]);
        let q = query(&[&[1.0], &[0.0]]);
        let r = Ranking::from_indices(&q, &[0, 1]).unwrap();
        assert!(matches!(b.update(&q, &r), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn resampling_triggers_and_keeps_ball() {
        let cfg = BeliefConfig { n_particles: 500, ..Default::default() };
        let mut b = PreferenceBelief::init_prior(3, cfg, &mut seeded(8)).unwrap();
        let q = query(&[&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let r = Ranking::from_indices(&q, &[0, 2, 1]).unwrap();
        for _ in 0..20 {
            b = b.update(&q, &r).unwrap();
            assert!(b.particles().iter().all(|p| p.norm() <= 1.0 + 1e-9));
            let total: f64 = b.weights().iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        }
        assert!(b.resamplings > 0);
        assert!(b.map_estimate().as_slice()[0] > 0.3);
    }

    #[test]
    fn resampling_preserves_weighted_mean() {
        // Monte Carlo over seeds: the post-resampling mean (before jitter matters
        // on average) should track the pre-resampling weighted mean.
        let q = query(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let r = Ranking::from_indices(&q, &[0, 1]).unwrap();
        let mut diffs = Vec::new();
        for seed in 0..200u64 {
            let cfg = BeliefConfig { n_particles: 400, jitter_std: 0.0, resample: false, ..Default::default() };
            let b = PreferenceBelief::init_prior(2, cfg, &mut seeded(seed)).unwrap();
            let mut b = b.update(&q, &r).unwrap().update(&q, &r).unwrap();
            let before = b.map_estimate().as_slice()[0];
            b.resample();
            let after = b.map_estimate().as_slice()[0];
            diffs.push(after - before);
        }
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 3.0 * sd / n.sqrt() + 1e-12, "mean shift {mean}, se {}", sd / n.sqrt());
    }

    #[test]
    fn snapshot_json_shape() {
        let b = fixed(&[&[1.0, 0.0], &[-1.0, 0.0]], &[0.5, 0.5]);
        let js = serde_json::to_value(b.snapshot()).unwrap();
        assert_eq!(js["d"], 2);
        assert_eq!(js["particles"][1][0], -1.0);
        assert_eq!(js["log_weights"].as_array().unwrap().len(), 2);
    }
}
