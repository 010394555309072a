use serde::{Deserialize, Serialize};

use super::normal::std_normal_cdf;
use crate::error::{CredalError, Result};

/// Tolerance on conditional probability vectors.
pub const LABEL_SIMPLEX_TOL: f64 = 1e-12;

/// A conditional label mechanism `P(Y | X = x)`.
///
/// Every variant except `Tabular` is binary; class 1 is the positive event.
/// Points exactly on a boundary belong to class 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Labeler {
    /// Class 1 iff `x > theta`. `theta = ±∞` gives a constant labeler.
    Threshold { theta: f64 },
    /// Class 1 iff `a < x <= b`.
    Interval { a: f64, b: f64 },
    /// `P(Y = 1 | x) = σ(slope · (x − bias))`.
    Sigmoid { slope: f64, bias: f64 },
    /// `P(Y = 1 | x) = Φ(kappa · (x − bias))`.
    Probit { kappa: f64, bias: f64 },
    /// A deterministic labeler whose output is flipped with probability `epsilon`.
    SymmetricNoise { base: Box<Labeler>, epsilon: f64 },
    /// Probability vectors listed at grid points; undefined elsewhere.
    Tabular { grid: Vec<f64>, probs: Vec<Vec<f64>> },
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Labeler {
    pub fn threshold(theta: f64) -> Self {
        Labeler::Threshold { theta }
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        let l = Labeler::Interval { a, b };
        l.validate()?;
        Ok(l)
    }

    pub fn sigmoid(slope: f64, bias: f64) -> Self {
        Labeler::Sigmoid { slope, bias }
    }

    pub fn probit(kappa: f64, bias: f64) -> Self {
        Labeler::Probit { kappa, bias }
    }

    pub fn noisy(base: Labeler, epsilon: f64) -> Result<Self> {
        let l = Labeler::SymmetricNoise {
            base: Box::new(base),
            epsilon,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn tabular(grid: Vec<f64>, probs: Vec<Vec<f64>>) -> Result<Self> {
        let l = Labeler::Tabular { grid, probs };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Labeler::Threshold { theta } => {
                if theta.is_nan() {
                    return Err(CredalError::invalid("threshold is NaN"));
                }
            }
            Labeler::Interval { a, b } => {
                if a.is_nan() || b.is_nan() || a >= b {
                    return Err(CredalError::invalid(format!("interval needs a < b, got ({a}, {b}]")));
                }
            }
            Labeler::Sigmoid { slope, bias } => {
                if !slope.is_finite() || !bias.is_finite() {
                    return Err(CredalError::invalid("sigmoid parameters must be finite"));
                }
            }
            Labeler::Probit { kappa, bias } => {
                if !kappa.is_finite() || !bias.is_finite() {
                    return Err(CredalError::invalid("probit parameters must be finite"));
                }
            }
            Labeler::SymmetricNoise { base, epsilon } => {
                if !(0.0..=0.5).contains(epsilon) {
                    return Err(CredalError::invalid(format!("noise rate {epsilon} outside [0, 0.5]")));
                }
                if !base.is_deterministic() {
                    return Err(CredalError::invalid(
                        "noisy labeler needs a threshold or interval base",
                    ));
                }
                base.validate()?;
            }
            Labeler::Tabular { grid, probs } => {
                if grid.is_empty() {
                    return Err(CredalError::Empty("tabular labeler has no grid".into()));
                }
                if grid.len() != probs.len() {
                    return Err(CredalError::DimensionMismatch {
                        left: grid.len(),
                        right: probs.len(),
                    });
                }
                if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(CredalError::invalid("tabular grid must be finite and strictly increasing"));
                }
                let c = probs[0].len();
                if c < 2 {
                    return Err(CredalError::invalid("tabular labeler needs at least two classes"));
                }
                for row in probs {
                    if row.len() != c {
                        return Err(CredalError::ClassCountMismatch(c, row.len()));
                    }
                    check_simplex(row, LABEL_SIMPLEX_TOL)?;
                }
            }
        }
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        match self {
            Labeler::Tabular { probs, .. } => probs.first().map_or(0, Vec::len),
            _ => 2,
        }
    }

    /// Threshold and interval labelers.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, Labeler::Threshold { .. } | Labeler::Interval { .. })
    }

    pub fn is_tabular(&self) -> bool {
        matches!(self, Labeler::Tabular { .. })
    }

    /// True when `P(Y | x)` is a step function of `x`.
    pub(crate) fn is_piecewise_constant(&self) -> bool {
        matches!(
            self,
            Labeler::Threshold { .. } | Labeler::Interval { .. } | Labeler::SymmetricNoise { .. }
        )
    }

    /// Finite discontinuity points of `x ↦ P(Y | x)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match self {
            Labeler::Threshold { theta } => vec![*theta],
            Labeler::Interval { a, b } => vec![*a, *b],
            Labeler::SymmetricNoise { base, .. } => base.breakpoints(),
            _ => Vec::new(),
        };
        out.retain(|v| v.is_finite());
        out
    }

    /// `P(Y = 1 | x)` for the binary variants.
    pub(crate) fn positive_prob(&self, x: f64) -> Result<f64> {
        Ok(match self {
            Labeler::Threshold { theta } => f64::from(u8::from(x > *theta)),
            Labeler::Interval { a, b } => f64::from(u8::from(x > *a && x <= *b)),
            Labeler::Sigmoid { slope, bias } => sigmoid(slope * (x - bias)),
            Labeler::Probit { kappa, bias } => std_normal_cdf(kappa * (x - bias)),
            Labeler::SymmetricNoise { base, epsilon } => {
                let b = base.positive_prob(x)?;
                epsilon + (1.0 - 2.0 * epsilon) * b
            }
            Labeler::Tabular { .. } => {
                let v = self.tabular_row(x)?;
                if v.len() != 2 {
                    return Err(CredalError::ClassCountMismatch(2, v.len()));
                }
                v[1]
            }
        })
    }

    fn tabular_row(&self, x: f64) -> Result<&[f64]> {
        match self {
            Labeler::Tabular { grid, probs } => grid
                .binary_search_by(|g| g.total_cmp(&x))
                .map(|k| probs[k].as_slice())
                .map_err(|_| CredalError::OffGrid(x)),
            _ => unreachable!("tabular_row on a parametric labeler"),
        }
    }

    /// Conditional class-probability vector at `x`.
    pub fn probs(&self, x: f64) -> Result<Vec<f64>> {
        match self {
            Labeler::Tabular { .. } => Ok(self.tabular_row(x)?.to_vec()),
            _ => {
                let p = self.positive_prob(x)?;
                Ok(vec![1.0 - p, p])
            }
        }
    }
}

pub(crate) fn check_simplex(v: &[f64], tol: f64) -> Result<()> {
    if v.iter().any(|p| !p.is_finite() || *p < -tol) {
        return Err(CredalError::NotOnSimplex(format!("{v:?} has a negative entry")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(CredalError::NotOnSimplex(format!("{v:?} sums to {total}")));
    }
    Ok(())
}
