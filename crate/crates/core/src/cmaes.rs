//! Ask/tell CMA-ES driven by ordinal feedback.
//!
//! The state holds the search distribution `N(m, sigma^2 C)` together with the
//! two evolution paths. `tell` receives a population already sorted best-first
//! (a human ranking, in the interactive setting) and performs the standard
//! `(mu/mu_w, lambda)` update: weighted recombination of the mean, cumulative
//! step-size adaptation, and rank-one plus rank-mu covariance adaptation.
//! Strategy constants are derived from `(d, lambda)` on every call, since the
//! population size is whatever the caller ranked.

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::standard_normal_vec;
use crate::types::FeatureVector;

/// Population size used when the caller does not choose one (a 4-item query).
pub const DEFAULT_POPULATION: usize = 4;

/// Eigenvalues of `C` are floored here if adaptation loses definiteness.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Strategy constants for a `(d, lambda)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyParams {
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c1: f64,
    pub c_mu: f64,
    /// `E||N(0, I)||`.
    pub chi_n: f64,
}

impl StrategyParams {
    pub fn new(dim: usize, lambda: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("search dimension must be >= 1");
        }
        if lambda < 2 {
            return invalid(format!("population size must be >= 2, got {lambda}"));
        }
        let n = dim as f64;
        let mu = lambda.div_ceil(2);
        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Ok(Self {
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c1,
            c_mu,
            chi_n,
        })
    }
}

/// JSON form `{m, C, sigma, p_sigma, p_c, gen}` with `C` row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSnapshot {
    pub m: Vec<f64>,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    pub sigma: f64,
    pub p_sigma: Vec<f64>,
    pub p_c: Vec<f64>,
    pub gen: u64,
}

#[derive(Clone, Debug)]
pub struct SearchState {
    dim: usize,
    population: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    sigma: f64,
    p_sigma: DVector<f64>,
    p_c: DVector<f64>,
    generation: u64,
    /// Eigenvectors of `cov` (columns).
    basis: DMatrix<f64>,
    /// Square roots of the eigenvalues of `cov`.
    scales: DVector<f64>,
}

impl SearchState {
    /// Identity covariance, zero paths, mean at `m0` or the origin.
    pub fn init(dim: usize, sigma0: f64, m0: Option<&FeatureVector>) -> Result<Self> {
        if dim == 0 {
            return invalid("search dimension must be >= 1");
        }
        if !(sigma0.is_finite() && sigma0 > 0.0) {
            return invalid(format!("initial step size must be positive and finite, got {sigma0}"));
        }
        let mean = match m0 {
            Some(m) if m.dim() != dim => {
                return invalid(format!("initial mean has dimension {}, expected {dim}", m.dim()))
            }
            Some(m) => DVector::from_column_slice(m.as_slice()),
            None => DVector::zeros(dim),
        };
        Ok(Self {
            dim,
            population: DEFAULT_POPULATION,
            mean,
            cov: DMatrix::identity(dim, dim),
            sigma: sigma0,
            p_sigma: DVector::zeros(dim),
            p_c: DVector::zeros(dim),
            generation: 0,
            basis: DMatrix::identity(dim, dim),
            scales: DVector::from_element(dim, 1.0),
        })
    }

    /// Sets the nominal population size reported by [`SearchState::params`].
    pub fn with_population(mut self, lambda: usize) -> Result<Self> {
        StrategyParams::new(self.dim, lambda)?;
        self.population = lambda;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn p_sigma(&self) -> &[f64] {
        self.p_sigma.as_slice()
    }

    pub fn p_c(&self) -> &[f64] {
        self.p_c.as_slice()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn params(&self) -> StrategyParams {
        StrategyParams::new(self.dim, self.population).expect("population validated on construction")
    }

    /// Smallest eigenvalue of `C` from the last decomposition.
    pub fn min_eigenvalue(&self) -> f64 {
        self.scales.iter().map(|s| s * s).fold(f64::INFINITY, f64::min)
    }

    /// `n` independent draws `m + sigma * B * D * z`.
    pub fn ask<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<FeatureVector>> {
        if n == 0 {
            return invalid("ask needs n >= 1");
        }
        (0..n)
            .map(|_| {
                let z = DVector::from_vec(standard_normal_vec(self.dim, rng));
                let x = &self.mean + self.sigma * (&self.basis * z.component_mul(&self.scales));
                if x.iter().all(|v| v.is_finite()) {
                    Ok(FeatureVector::from_raw(x.as_slice().to_vec()))
                } else {
                    Err(self.numerical_error("non-finite sample"))
                }
            })
            .collect()
    }

    /// Updates the distribution from a population sorted best-first.
    pub fn tell(mut self, ranked: &[FeatureVector]) -> Result<Self> {
        if ranked.len() < 2 {
            return invalid(format!("tell needs at least 2 ranked points, got {}", ranked.len()));
        }
        if let Some(x) = ranked.iter().find(|x| x.dim() != self.dim) {
            return invalid(format!("ranked point has dimension {}, expected {}", x.dim(), self.dim));
        }
        let p = StrategyParams::new(self.dim, ranked.len())?;
        let n = self.dim as f64;

        let old_mean = self.mean.clone();
        let steps: Vec<DVector<f64>> = ranked[..p.mu]
            .iter()
            .map(|x| (DVector::from_column_slice(x.as_slice()) - &old_mean) / self.sigma)
            .collect();
        let mut y_w = DVector::zeros(self.dim);
        for (w, y) in p.weights.iter().zip(&steps) {
            y_w.axpy(*w, y, 1.0);
        }
        self.mean = &old_mean + self.sigma * &y_w;

        // C^{-1/2} y_w = B D^{-1} B^T y_w
        let whitened = &self.basis * (self.basis.tr_mul(&y_w)).component_div(&self.scales);
        self.p_sigma = (1.0 - p.c_sigma) * &self.p_sigma
            + (p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff).sqrt() * whitened;
        let ps_norm = self.p_sigma.norm();

        let gen = self.generation + 1;
        let hsig_threshold = 1.4 + 2.0 / (n + 1.0);
        let ps_corrected = ps_norm / (1.0 - (1.0 - p.c_sigma).powi(2 * gen.min(1 << 20) as i32)).sqrt();
        let hsig = if ps_corrected / p.chi_n < hsig_threshold { 1.0 } else { 0.0 };

        self.p_c = (1.0 - p.c_c) * &self.p_c + hsig * (p.c_c * (2.0 - p.c_c) * p.mu_eff).sqrt() * &y_w;

        let decay = 1.0 - p.c1 - p.c_mu + (1.0 - hsig) * p.c1 * p.c_c * (2.0 - p.c_c);
        let mut cov = decay * &self.cov;
        cov.ger(p.c1, &self.p_c, &self.p_c, 1.0);
        for (w, y) in p.weights.iter().zip(&steps) {
            cov.ger(p.c_mu * w, y, y, 1.0);
        }
        self.cov = (&cov + cov.transpose()) * 0.5;

        self.sigma *= ((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0)).exp();
        self.generation = gen;

        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(self.numerical_error("step size left (0, inf)"));
        }
        self.refresh_eigen()?;
        Ok(self)
    }

    fn refresh_eigen(&mut self) -> Result<()> {
        if self.cov.iter().any(|v| !v.is_finite()) {
            return Err(self.numerical_error("non-finite covariance"));
        }
        let eig = SymmetricEigen::new(self.cov.clone());
        let min = eig.eigenvalues.min();
        let mut values = eig.eigenvalues.clone();
        if min < EIGENVALUE_FLOOR {
            warn!(
                "covariance lost positive definiteness at generation {} (min eigenvalue {min:e}); flooring at {EIGENVALUE_FLOOR:e}",
                self.generation
            );
            values.iter_mut().for_each(|v| *v = v.max(EIGENVALUE_FLOOR));
            let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&values) * eig.eigenvectors.transpose();
            self.cov = (&rebuilt + rebuilt.transpose()) * 0.5;
        }
        self.basis = eig.eigenvectors;
        self.scales = values.map(f64::sqrt);
        Ok(())
    }

    fn numerical_error(&self, what: &str) -> Error {
        Error::Numerical(format!(
            "{what} at generation {}: sigma={:e}, |m|={:e}, diag(C) in [{:e}, {:e}]",
            self.generation,
            self.sigma,
            self.mean.norm(),
            self.cov.diagonal().min(),
            self.cov.diagonal().max()
        ))
    }

    pub fn snapshot(&self) -> SearchSnapshot {
        SearchSnapshot {
            m: self.mean.as_slice().to_vec(),
            c: self.cov.transpose().as_slice().to_vec(),
            sigma: self.sigma,
            p_sigma: self.p_sigma.as_slice().to_vec(),
            p_c: self.p_c.as_slice().to_vec(),
            gen: self.generation,
        }
    }

    pub fn from_snapshot(snap: &SearchSnapshot) -> Result<Self> {
        let dim = snap.m.len();
        if dim == 0 || snap.c.len() != dim * dim || snap.p_sigma.len() != dim || snap.p_c.len() != dim {
            return invalid("search snapshot has inconsistent shapes");
        }
        let mut state = Self::init(dim, snap.sigma, None)?;
        state.mean = DVector::from_column_slice(&snap.m);
        state.cov = DMatrix::from_row_slice(dim, dim, &snap.c);
        state.p_sigma = DVector::from_column_slice(&snap.p_sigma);
        state.p_c = DVector::from_column_slice(&snap.p_c);
        state.generation = snap.gen;
        state.refresh_eigen()?;
        Ok(state)
    }
}
