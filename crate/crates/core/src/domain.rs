//! Feature-space domains and projection onto them.

use std::sync::Arc;

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::rng::{uniform_ball, uniform_cube};
use crate::types::{dot, FeatureVector, PreferenceVector};

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// Closed unit ball.
    UnitBall,
    /// `[-1, 1]^d`.
    Hypercube,
    /// A fixed set of pre-collected feature vectors; candidates snap to their
    /// nearest neighbor.
    Dataset(Arc<Vec<FeatureVector>>),
}

impl Domain {
    pub fn dataset(points: Vec<FeatureVector>) -> Result<Self> {
        if points.is_empty() {
            return invalid("dataset domain needs at least one point");
        }
        let dim = points[0].dim();
        if points.iter().any(|p| p.dim() != dim) {
            return invalid("dataset points have inconsistent dimensions");
        }
        Ok(Domain::Dataset(Arc::new(points)))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Domain::UnitBall => "unit_ball",
            Domain::Hypercube => "hypercube",
            Domain::Dataset(_) => "dataset",
        }
    }

    /// Membership up to a small tolerance.
    pub fn contains(&self, phi: &FeatureVector) -> bool {
        match self {
            Domain::UnitBall => phi.norm() <= 1.0 + 1e-9,
            Domain::Hypercube => phi.as_slice().iter().all(|x| x.abs() <= 1.0 + 1e-12),
            Domain::Dataset(points) => points.iter().any(|p| p == phi),
        }
    }

    /// Maps an arbitrary point into the domain: radial scaling for the ball,
    /// per-coordinate clamping for the cube, exhaustive nearest neighbor (lowest
    /// index on ties) for datasets.
    pub fn project(&self, point: &FeatureVector) -> Result<FeatureVector> {
        match self {
            Domain::UnitBall => Ok(point.clone().clamped_to_unit_ball()),
            Domain::Hypercube => Ok(FeatureVector::from_raw(
                point.as_slice().iter().map(|x| x.clamp(-1.0, 1.0)).collect(),
            )),
            Domain::Dataset(points) => {
                let first = points.first().ok_or_else(|| {
                    crate::Error::InvalidArgument("cannot project onto an empty dataset".into())
                })?;
                if first.dim() != point.dim() {
                    return invalid(format!(
                        "point has dimension {}, dataset has {}",
                        point.dim(),
                        first.dim()
                    ));
                }
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (i, p) in points.iter().enumerate() {
                    let d: f64 = p
                        .as_slice()
                        .iter()
                        .zip(point.as_slice())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                Ok(points[best].clone())
            }
        }
    }

    /// `m` uniform draws from the domain. Datasets are subsampled without
    /// replacement while they have enough points, then with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, m: usize, rng: &mut R) -> Vec<FeatureVector> {
        match self {
            Domain::UnitBall => (0..m).map(|_| FeatureVector::from_raw(uniform_ball(dim, rng))).collect(),
            Domain::Hypercube => (0..m).map(|_| FeatureVector::from_raw(uniform_cube(dim, rng))).collect(),
            Domain::Dataset(points) => {
                if m <= points.len() {
                    sample_indices(rng, points.len(), m)
                        .into_iter()
                        .map(|i| points[i].clone())
                        .collect()
                } else {
                    (0..m).map(|_| points[rng.random_range(0..points.len())].clone()).collect()
                }
            }
        }
    }

    /// The domain point maximizing `omega . phi` (lowest index on ties for datasets).
    pub fn argmax(&self, omega: &PreferenceVector) -> FeatureVector {
        match self {
            Domain::UnitBall => {
                let n = omega.norm();
                if n > 0.0 {
                    FeatureVector::from_raw(omega.as_slice().iter().map(|w| w / n).collect())
                } else {
                    FeatureVector::zeros(omega.dim())
                }
            }
            Domain::Hypercube => FeatureVector::from_raw(
                omega
                    .as_slice()
                    .iter()
                    .map(|w| if *w > 0.0 { 1.0 } else if *w < 0.0 { -1.0 } else { 0.0 })
                    .collect(),
            ),
            Domain::Dataset(points) => {
                let mut best = 0;
                let mut best_r = f64::NEG_INFINITY;
                for (i, p) in points.iter().enumerate() {
                    let r = dot(omega.as_slice(), p.as_slice());
                    if r > best_r {
                        best_r = r;
                        best = i;
                    }
                }
                points[best].clone()
            }
        }
    }
}
