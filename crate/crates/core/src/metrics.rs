//! Accuracy and experience metrics for a learning run.

use crate::belief::PreferenceBelief;
use crate::domain::Domain;
use crate::error::{invalid, Result};
use crate::types::{dot, PreferenceVector, Query};

/// Weighted mean cosine similarity between belief particles and `omega_star`.
/// Zero-norm particles contribute a cosine of 0.
pub fn alignment(belief: &PreferenceBelief, omega_star: &PreferenceVector) -> Result<f64> {
    if omega_star.dim() != belief.dim() {
        return invalid(format!(
            "omega_star has dimension {}, belief has {}",
            omega_star.dim(),
            belief.dim()
        ));
    }
    let star_norm = omega_star.norm();
    if star_norm == 0.0 {
        return invalid("alignment needs a nonzero omega_star");
    }
    let mut total = 0.0;
    let mut skipped = 0usize;
    for (w, p) in belief.weights().iter().zip(belief.particles()) {
        let n = p.norm();
        if n == 0.0 {
            skipped += 1;
            continue;
        }
        total += w * dot(p.as_slice(), omega_star.as_slice()) / (n * star_norm);
    }
    if skipped > 0 {
        log::debug!("alignment skipped {skipped} zero-norm particles");
    }
    Ok(total.clamp(-1.0, 1.0))
}

/// True-reward gap between the domain optimum for `omega_star` and the domain
/// optimum for `omega_hat`.
pub fn regret(omega_hat: &PreferenceVector, omega_star: &PreferenceVector, domain: &Domain) -> Result<f64> {
    if omega_hat.dim() != omega_star.dim() {
        return invalid("omega_hat and omega_star dimensions differ");
    }
    if omega_hat.norm() == 0.0 || omega_star.norm() == 0.0 {
        return invalid("regret needs nonzero preference vectors");
    }
    if let Domain::Dataset(points) = domain {
        if points.first().map(|p| p.dim()) != Some(omega_star.dim()) {
            return invalid("dataset dimension does not match the preference vectors");
        }
    }
    let best = domain.argmax(omega_star);
    let chosen = domain.argmax(omega_hat);
    let gap = dot(omega_star.as_slice(), best.as_slice()) - dot(omega_star.as_slice(), chosen.as_slice());
    Ok(gap.max(0.0))
}

/// Mean true reward of the query's items.
pub fn quality(query: &Query, omega_star: &PreferenceVector) -> Result<f64> {
    let rewards = query.rewards(omega_star)?;
    Ok(rewards.iter().sum::<f64>() / rewards.len() as f64)
}

/// Composite trapezoid over unit-spaced samples, divided by the interval
/// length `N - 1`.
pub fn auc(series: &[f64]) -> Result<f64> {
    if series.len() < 2 {
        return invalid(format!("auc needs at least 2 points, got {}", series.len()));
    }
    let area: f64 = series.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
    Ok(area / (series.len() - 1) as f64)
}
