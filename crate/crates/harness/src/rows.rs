//! Result rows and their canonical CSV form.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentKind;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Metric {
    Real(f64),
    /// Binary outcome, summarized as a rate with a Wilson interval.
    Flag(bool),
}

impl Metric {
    fn render(&self) -> String {
        match self {
            Metric::Real(v) => v.to_string(),
            Metric::Flag(b) => b.to_string(),
        }
    }
}

/// One unit of output: a replication, a grid point or a trace step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub seed: u64,
    /// Unique within a run; rows are written in index order.
    pub index: u64,
    /// Aggregation cell, e.g. `n=1000` or `soft/joint`.
    pub group: String,
    pub metrics: Vec<(String, Metric)>,
}

impl ResultRow {
    pub fn metric(&self, name: &str) -> Option<Metric> {
        self.metrics.iter().find(|(k, _)| k == name).map(|(_, m)| *m)
    }

    pub fn real(&self, name: &str) -> Option<f64> {
        match self.metric(name)? {
            Metric::Real(v) => Some(v),
            Metric::Flag(_) => None,
        }
    }

    pub fn flag(&self, name: &str) -> Option<bool> {
        match self.metric(name)? {
            Metric::Flag(b) => Some(b),
            Metric::Real(_) => None,
        }
    }
}

/// Builder for the metric list of one row.
#[derive(Default)]
pub struct Metrics(Vec<(String, Metric)>);

impl Metrics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn real(mut self, name: &str, v: f64) -> Self {
        self.0.push((name.to_string(), Metric::Real(v)));
        self
    }

    pub fn flag(mut self, name: &str, b: bool) -> Self {
        self.0.push((name.to_string(), Metric::Flag(b)));
        self
    }

    pub fn into_vec(self) -> Vec<(String, Metric)> {
        self.0
    }
}

const FIXED_COLUMNS: [&str; 5] = ["experiment", "config_hash", "seed", "index", "group"];

/// Metric columns in first-appearance order over index-sorted rows.
fn metric_columns(rows: &[&ResultRow]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for r in rows {
        for (k, _) in &r.metrics {
            if !cols.contains(k) {
                cols.push(k.clone());
            }
        }
    }
    cols
}

/// Writes the CSV body: header plus rows sorted by index. The body depends
/// only on the rows, never on the order they were produced in.
pub fn write_csv_body<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.index);
    let cols = metric_columns(&sorted);
    let mut out = csv::Writer::from_writer(w);
    out.write_record(FIXED_COLUMNS.iter().map(|s| s.to_string()).chain(cols.iter().cloned()))?;
    for r in sorted {
        let mut rec = vec![
            r.experiment.to_string(),
            r.config_hash.clone(),
            r.seed.to_string(),
            r.index.to_string(),
            r.group.clone(),
        ];
        rec.extend(cols.iter().map(|c| r.metric(c).map(|m| m.render()).unwrap_or_default()));
        out.write_record(rec)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// First line of every CSV file; the only line that varies between re-runs.
pub fn provenance_line(config_hash: &str, timestamp: &str) -> String {
    format!("# generated {timestamp} config_hash={config_hash}\n")
}
