//! Seeded random sources and the seed-splitting scheme.
//!
//! Every stochastic routine takes its random source as an argument; nothing in
//! this crate touches a global generator. Child seeds are derived from a parent
//! seed and a path of integer labels with SplitMix64, so a run tree
//! (experiment -> dimension -> user -> stream) is reproducible regardless of
//! the order in which its branches execute.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// The generator used throughout the workspace.
pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` along `path`.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(parent), |acc, &label| splitmix64(acc ^ splitmix64(label)))
}

pub fn standard_normal_vec<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform draw from the closed unit ball: a Gaussian direction scaled by `U^(1/d)`.
pub fn uniform_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let dir = standard_normal_vec(dim, rng);
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            let radius = rng.random::<f64>().powf(1.0 / dim as f64);
            return dir.into_iter().map(|x| x / norm * radius).collect();
        }
    }
}

/// Uniform draw from `[-1, 1]^d`.
pub fn uniform_cube<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
}
