//! Running a config end to end and writing its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiments::{self, Ctx};
use crate::rows::{provenance_line, write_csv_body, ResultRow};
use crate::summary::{summarize, Summary};

/// Everything a run produces, before or after it is written out.
#[derive(Clone, Debug)]
pub struct Report {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
    pub derived: Value,
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    generated: &'a str,
    config_hash: &'a str,
    config: &'a ExperimentConfig,
    summary: &'a Summary,
    derived: &'a Value,
}

/// Validates the config and computes rows, summary and derived tables in memory.
pub fn execute(config: &ExperimentConfig) -> Result<Report> {
    let mut config = config.clone();
    config.fill_from_preset()?;
    config.validate()?;
    let hash = config.hash()?;
    let ctx = Ctx {
        cfg: &config,
        hash: &hash,
    };
    let mut rows = experiments::rows(&ctx)?;
    rows.sort_by_key(|r| r.index);
    let summary = summarize(&rows)?;
    let derived = experiments::derived(&config, &summary, &rows)?;
    Ok(Report {
        config,
        config_hash: hash,
        rows,
        summary,
        derived,
    })
}

/// Paths of the files written by [`run`].
#[derive(Clone, Debug)]
pub struct Written {
    pub rows: PathBuf,
    pub summary: PathBuf,
}

impl Report {
    pub fn csv_body(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_csv_body(&mut buf, &self.rows)?;
        Ok(buf)
    }

    pub fn write(&self, out_dir: &Path) -> Result<Written> {
        fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
        let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        let rows_path = out_dir.join(&self.config.output.rows);
        let mut csv = provenance_line(&self.config_hash, &stamp).into_bytes();
        csv.extend(self.csv_body()?);
        fs::write(&rows_path, csv).map_err(|e| HarnessError::io(&rows_path, e))?;

        let summary_path = out_dir.join(&self.config.output.summary);
        let doc = SummaryDocument {
            generated: &stamp,
            config_hash: &self.config_hash,
            config: &self.config,
            summary: &self.summary,
            derived: &self.derived,
        };
        let json = serde_json::to_string_pretty(&doc)?;
        fs::write(&summary_path, json + "\n").map_err(|e| HarnessError::io(&summary_path, e))?;
        Ok(Written {
            rows: rows_path,
            summary: summary_path,
        })
    }
}

/// Executes `config` and writes the row CSV and JSON summary into `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<(Report, Written)> {
    let report = execute(config)?;
    let written = report.write(out_dir)?;
    Ok((report, written))
}
