//! Luce-Shepard selection and Plackett-Luce ranking probabilities, and the
//! noisily-rational simulated ranker built on them.
//!
//! Every probability takes a rationality `beta` that scales rewards inside the
//! softmax: `beta = 1` is the plain model, `beta = 0` is a uniformly random
//! ranker, and large `beta` approaches a noiseless one. All softmaxes are
//! evaluated with max-subtraction.

use std::sync::OnceLock;

use itertools::Itertools;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::types::{ItemId, PreferenceVector, Query, Ranking, MAX_QUERY_SIZE};

pub const DEFAULT_BETA: f64 = 1.0;

/// Rationality of a simulated ranker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RationalityConfig {
    beta: f64,
}

impl RationalityConfig {
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Default for RationalityConfig {
    fn default() -> Self {
        Self { beta: DEFAULT_BETA }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return invalid(format!("rationality beta must be finite and >= 0, got {beta}"));
    }
    Ok(())
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln sum exp(xs)` with max-subtraction.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log-probability of choosing `rewards[chosen]` out of all of `rewards`.
pub fn log_selection_prob_from_rewards(rewards: &[f64], chosen: usize, beta: f64) -> f64 {
    let scaled: Vec<f64> = rewards.iter().map(|r| beta * r).collect();
    scaled[chosen] - log_sum_exp(&scaled)
}

/// Plackett-Luce log-probability of `order` (indices into `rewards`,
/// most-preferred first). Stage `i` chooses `order[i]` among `order[i..]`;
/// the normalizers are accumulated from the back so each costs one log-add.
pub fn log_plackett_luce(rewards: &[f64], order: &[usize], beta: f64) -> f64 {
    let mut tail = f64::NEG_INFINITY;
    let mut total = 0.0;
    for &idx in order.iter().rev() {
        let s = beta * rewards[idx];
        tail = log_add_exp(tail, s);
        total += s - tail;
    }
    total
}

/// All orderings of `0..k`, cached per `k`.
pub fn permutations(k: usize) -> &'static [Vec<usize>] {
    static TABLE: OnceLock<Vec<Vec<Vec<usize>>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        (0..=MAX_QUERY_SIZE)
            .map(|n| (0..n).permutations(n).collect())
            .collect()
    });
    &table[k]
}

/// Shannon entropy (nats) of the Plackett-Luce ranking distribution induced by
/// `rewards`.
///
/// Exact. Uses the chain rule over the first choice,
/// `H(S) = sum_i p_i(S) (-ln p_i(S) + H(S \ {i}))`, evaluated over all
/// `2^K` subsets instead of the `K!` orderings.
pub fn ranking_entropy(rewards: &[f64], beta: f64) -> f64 {
    let k = rewards.len();
    assert!(k <= MAX_QUERY_SIZE, "ranking entropy needs K <= {MAX_QUERY_SIZE}");
    if k < 2 {
        return 0.0;
    }
    if k == 2 {
        return binary_entropy_logit(beta * (rewards[0] - rewards[1]));
    }
    let max = rewards.iter().map(|r| beta * r).fold(f64::NEG_INFINITY, f64::max);
    let mut z = [0.0; MAX_QUERY_SIZE];
    let mut u = [0.0; MAX_QUERY_SIZE];
    for i in 0..k {
        z[i] = beta * rewards[i] - max;
        u[i] = z[i].exp();
    }
    const MASKS: usize = 1 << MAX_QUERY_SIZE;
    let mut h = [0.0; MASKS];
    for mask in 1usize..(1 << k) {
        if mask.count_ones() == 1 {
            continue;
        }
        let members = (0..k).filter(|i| mask & (1 << i) != 0);
        let sum: f64 = members.clone().map(|i| u[i]).sum();
        let ln_sum = if sum > 1e-300 {
            sum.ln()
        } else {
            // Every member underflowed; shift by the subset's own max instead.
            let top = members.clone().map(|i| z[i]).fold(f64::NEG_INFINITY, f64::max);
            top + members.clone().map(|i| (z[i] - top).exp()).sum::<f64>().ln()
        };
        let mut acc = 0.0;
        for i in members {
            let lp = z[i] - ln_sum;
            let p = if sum > 0.0 { u[i] / sum } else { lp.exp() };
            if p > 0.0 {
                acc += p * (h[mask ^ (1 << i)] - lp);
            }
        }
        h[mask] = acc;
    }
    h[(1 << k) - 1]
}

/// `H(sigmoid(z))` in nats, stable for large `|z|`.
pub fn binary_entropy_logit(z: f64) -> f64 {
    // With t = e^-|z|: H = ln(1 + t) + |z| t / (1 + t).
    let a = z.abs();
    let t = (-a).exp();
    t.ln_1p() + a * t / (1.0 + t)
}

/// Draws an ordering of `0..rewards.len()` by repeated softmax selection
/// without replacement.
pub fn sample_order_from_rewards<R: Rng + ?Sized>(
    rewards: &[f64],
    beta: f64,
    rng: &mut R,
) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..rewards.len()).collect();
    let mut order = Vec::with_capacity(rewards.len());
    let mut weights = Vec::with_capacity(rewards.len());
    while remaining.len() > 1 {
        let max = remaining
            .iter()
            .map(|&i| beta * rewards[i])
            .fold(f64::NEG_INFINITY, f64::max);
        weights.clear();
        weights.extend(remaining.iter().map(|&i| (beta * rewards[i] - max).exp()));
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = remaining.len() - 1;
        for (slot, w) in weights.iter().enumerate() {
            if u < *w {
                pick = slot;
                break;
            }
            u -= w;
        }
        order.push(remaining.remove(pick));
    }
    order.extend(remaining);
    order
}

fn chosen_index(query: &Query, chosen_id: &ItemId) -> Result<usize> {
    query
        .position(chosen_id)
        .ok_or_else(|| Error::InvalidArgument(format!("item {chosen_id} is not in the query")))
}

/// Probability that `chosen_id` is picked first from the whole query.
pub fn selection_prob(
    query: &Query,
    chosen_id: &ItemId,
    omega: &PreferenceVector,
    beta: f64,
) -> Result<f64> {
    check_beta(beta)?;
    let idx = chosen_index(query, chosen_id)?;
    let rewards = query.rewards(omega)?;
    Ok(log_selection_prob_from_rewards(&rewards, idx, beta).exp())
}

pub fn log_ranking_prob(
    query: &Query,
    ranking: &Ranking,
    omega: &PreferenceVector,
    beta: f64,
) -> Result<f64> {
    check_beta(beta)?;
    let order = ranking.indices_in(query)?;
    let rewards = query.rewards(omega)?;
    Ok(log_plackett_luce(&rewards, &order, beta))
}

pub fn ranking_prob(
    query: &Query,
    ranking: &Ranking,
    omega: &PreferenceVector,
    beta: f64,
) -> Result<f64> {
    log_ranking_prob(query, ranking, omega, beta).map(f64::exp)
}

/// Simulated noisily-rational ranker with true preference `omega_star`.
pub fn sample_ranking<R: Rng + ?Sized>(
    query: &Query,
    omega_star: &PreferenceVector,
    beta: f64,
    rng: &mut R,
) -> Result<Ranking> {
    check_beta(beta)?;
    let rewards = query.rewards(omega_star)?;
    let order = sample_order_from_rewards(&rewards, beta, rng);
    Ranking::from_indices(query, &order)
}
