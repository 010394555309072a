use serde::{Deserialize, Serialize};

use super::normal::{normal_interval_mass, std_normal_quantile};
use crate::error::{CredalError, Result};

/// Tolerance on the total weight of a discrete environment.
pub const ENV_SIMPLEX_TOL: f64 = 1e-12;

/// A univariate covariate distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Environment {
    Gaussian { mean: f64, std: f64 },
    DiscreteGrid { points: Vec<f64>, weights: Vec<f64> },
}

impl Environment {
    pub fn gaussian(mean: f64, std: f64) -> Result<Self> {
        let e = Environment::Gaussian { mean, std };
        e.validate()?;
        Ok(e)
    }

    pub fn discrete(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let e = Environment::DiscreteGrid { points, weights };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Environment::Gaussian { mean, std } => {
                if !mean.is_finite() {
                    return Err(CredalError::invalid(format!("gaussian mean must be finite, got {mean}")));
                }
                if !(std.is_finite() && *std > 0.0) {
                    return Err(CredalError::invalid(format!(
                        "gaussian std must be positive and finite, got {std}"
                    )));
                }
                Ok(())
            }
            Environment::DiscreteGrid { points, weights } => {
                if points.is_empty() {
                    return Err(CredalError::Empty("discrete environment has no points".into()));
                }
                if points.len() != weights.len() {
                    return Err(CredalError::DimensionMismatch {
                        left: points.len(),
                        right: weights.len(),
                    });
                }
                if points.iter().any(|p| !p.is_finite()) {
                    return Err(CredalError::invalid("grid points must be finite"));
                }
                if points.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(CredalError::invalid("grid points must be strictly increasing"));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(CredalError::NotOnSimplex("negative or non-finite weight".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > ENV_SIMPLEX_TOL {
                    return Err(CredalError::NotOnSimplex(format!("weights sum to {total}")));
                }
                Ok(())
            }
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Environment::DiscreteGrid { .. })
    }

    /// Quantile function. `None` for discrete grids, which have no
    /// continuous inverse.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        match self {
            Environment::Gaussian { mean, std } => Some(mean + std * std_normal_quantile(p)),
            Environment::DiscreteGrid { .. } => None,
        }
    }

    /// Probability of the half-open interval `(a, b]`.
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        match self {
            Environment::Gaussian { mean, std } => normal_interval_mass(*mean, *std, a, b),
            Environment::DiscreteGrid { points, weights } => points
                .iter()
                .zip(weights)
                .filter(|(p, _)| **p > a && **p <= b)
                .map(|(_, w)| *w)
                .sum(),
        }
    }

    /// Range that carries all but a negligible amount of mass.
    pub fn effective_range(&self, halfwidth_sigmas: f64) -> (f64, f64) {
        match self {
            Environment::Gaussian { mean, std } => {
                (mean - halfwidth_sigmas * std, mean + halfwidth_sigmas * std)
            }
            Environment::DiscreteGrid { points, .. } => (points[0], points[points.len() - 1]),
        }
    }
}
