//! Order-independent aggregation of result rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentKind;
use crate::error::{HarnessError, Result};
use crate::rows::{Metric, ResultRow};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q90: f64,
    pub q95: f64,
    pub q99: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagStats {
    pub count: usize,
    pub successes: usize,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricStats {
    Real(RealStats),
    Flag(FlagStats),
}

impl MetricStats {
    pub fn as_real(&self) -> Option<&RealStats> {
        match self {
            MetricStats::Real(s) => Some(s),
            MetricStats::Flag(_) => None,
        }
    }

    pub fn as_flag(&self) -> Option<&FlagStats> {
        match self {
            MetricStats::Flag(s) => Some(s),
            MetricStats::Real(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub seed: u64,
    pub rows: usize,
    /// group → metric → statistics.
    pub groups: BTreeMap<String, BTreeMap<String, MetricStats>>,
}

impl Summary {
    pub fn get(&self, group: &str, metric: &str) -> Option<&MetricStats> {
        self.groups.get(group)?.get(metric)
    }

    pub fn real(&self, group: &str, metric: &str) -> Option<&RealStats> {
        self.get(group, metric)?.as_real()
    }

    pub fn flag(&self, group: &str, metric: &str) -> Option<&FlagStats> {
        self.get(group, metric)?.as_flag()
    }
}

/// Linear interpolation between order statistics of sorted data, so the
/// `q`-quantile of `[a, b]` is `a + q (b − a)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn real_stats(values: &[f64]) -> RealStats {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    // Summing in sorted order keeps the mean bit-identical under row permutations.
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    RealStats {
        count: v.len(),
        mean,
        median: quantile_sorted(&v, 0.5),
        q90: quantile_sorted(&v, 0.9),
        q95: quantile_sorted(&v, 0.95),
        q99: quantile_sorted(&v, 0.99),
        min: v[0],
        max: v[v.len() - 1],
    }
}

pub fn flag_stats(values: &[bool]) -> FlagStats {
    let successes = values.iter().filter(|b| **b).count();
    let (wilson_low, wilson_high) = wilson_interval(successes, values.len(), Z95);
    FlagStats {
        count: values.len(),
        successes,
        rate: successes as f64 / values.len() as f64,
        wilson_low,
        wilson_high,
    }
}

enum Column {
    Real(Vec<f64>),
    Flag(Vec<bool>),
}

/// Per-group, per-metric statistics. Rows must all come from one experiment.
pub fn summarize(rows: &[ResultRow]) -> Result<Summary> {
    let first = rows.first().ok_or(HarnessError::EmptyRows)?;
    let mut cells: BTreeMap<String, BTreeMap<String, Column>> = BTreeMap::new();
    for r in rows {
        if r.experiment != first.experiment {
            return Err(HarnessError::MixedExperiments(
                first.experiment.to_string(),
                r.experiment.to_string(),
            ));
        }
        let group = cells.entry(r.group.clone()).or_default();
        for (name, m) in &r.metrics {
            let col = group.entry(name.clone()).or_insert_with(|| match m {
                Metric::Real(_) => Column::Real(Vec::new()),
                Metric::Flag(_) => Column::Flag(Vec::new()),
            });
            match (col, m) {
                (Column::Real(v), Metric::Real(x)) => v.push(*x),
                (Column::Flag(v), Metric::Flag(b)) => v.push(*b),
                _ => {
                    return Err(HarnessError::Config(format!(
                        "metric {name} in group {} mixes real and flag values",
                        r.group
                    )))
                }
            }
        }
    }
    let groups = cells
        .into_iter()
        .map(|(g, cols)| {
            let stats = cols
                .into_iter()
                .map(|(name, col)| {
                    let s = match col {
                        Column::Real(v) => MetricStats::Real(real_stats(&v)),
                        Column::Flag(v) => MetricStats::Flag(flag_stats(&v)),
                    };
                    (name, s)
                })
                .collect();
            (g, stats)
        })
        .collect();
    Ok(Summary {
        experiment: first.experiment,
        config_hash: first.config_hash.clone(),
        seed: first.seed,
        rows: rows.len(),
        groups,
    })
}
