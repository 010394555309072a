//! Experiment drivers. Each turns a validated config into result rows and a
//! small table of derived quantities computed from the row summary.

mod estimation;
mod geometry;
mod learning;

pub use estimation::{compute_certificate, log_log_slope};

use credal_core::estimation::{empirical_disagreement_hard, empirical_disagreement_soft, AnnotatedSample, LabelKind};
use credal_core::measures::expected_conditional_tv;
use credal_core::synthgen::GenSeed;
use credal_core::{CredalError, Environment, Labeler, QuadratureConfig};
use rand::Rng;
use serde_json::Value;

use crate::config::{ExperimentConfig, ExperimentKind, RandomGaussians};
use crate::error::{HarnessError, Result};
use crate::rows::{Metrics, ResultRow};
use crate::summary::Summary;

/// Per-run constants shared by every row.
pub(crate) struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub hash: &'a str,
}

impl Ctx<'_> {
    pub fn quad(&self) -> &QuadratureConfig {
        &self.cfg.quadrature
    }

    pub fn seed(&self, substream: u64) -> GenSeed {
        GenSeed::new(self.cfg.seed, substream)
    }

    pub fn row(&self, index: u64, group: impl Into<String>, metrics: Metrics) -> ResultRow {
        ResultRow {
            experiment: self.cfg.experiment,
            config_hash: self.hash.to_string(),
            seed: self.cfg.seed,
            index,
            group: group.into(),
            metrics: metrics.into_vec(),
        }
    }

    /// Tags a core failure with the coordinates of the replication it hit.
    pub fn at(&self, index: u64) -> impl Fn(CredalError) -> HarnessError + '_ {
        move |source| HarnessError::Replication {
            experiment: self.cfg.experiment.to_string(),
            config_hash: self.hash.to_string(),
            index,
            source,
        }
    }
}

/// Rows for one run, before anything touches the filesystem.
pub(crate) fn rows(ctx: &Ctx<'_>) -> Result<Vec<ResultRow>> {
    match ctx.cfg.experiment {
        ExperimentKind::GatingCurve => geometry::gating_curve(ctx),
        ExperimentKind::BoundsSweep => geometry::bounds_sweep(ctx),
        ExperimentKind::DiameterAblation => estimation::diameter_ablation(ctx),
        ExperimentKind::NoiseAblation => estimation::noise_ablation(ctx),
        ExperimentKind::SampleComplexity => estimation::sample_complexity(ctx),
        ExperimentKind::MechanismComplexity => estimation::mechanism_complexity(ctx),
        ExperimentKind::MinimaxDemo => learning::minimax_demo(ctx),
        ExperimentKind::DroTrain => learning::dro_train(ctx),
        ExperimentKind::Certificate => estimation::certificate(ctx),
    }
}

pub(crate) fn derived(cfg: &ExperimentConfig, summary: &Summary, rows: &[ResultRow]) -> Result<Value> {
    Ok(match cfg.experiment {
        ExperimentKind::GatingCurve => geometry::gating_derived(rows),
        ExperimentKind::BoundsSweep => geometry::bounds_derived(summary),
        ExperimentKind::DiameterAblation | ExperimentKind::NoiseAblation => estimation::gap_derived(summary, rows),
        ExperimentKind::SampleComplexity | ExperimentKind::MechanismComplexity => {
            estimation::concentration_derived(cfg, summary)
        }
        ExperimentKind::MinimaxDemo => learning::minimax_derived(summary),
        ExperimentKind::DroTrain => learning::dro_derived(summary),
        ExperimentKind::Certificate => estimation::certificate_derived(cfg)?,
    })
}

/// Gaussians with uniformly drawn parameters from one seeded stream.
pub(crate) fn random_gaussians(spec: &RandomGaussians, seed: GenSeed) -> Vec<Environment> {
    let mut rng = seed.rng();
    (0..spec.count)
        .map(|_| {
            let [m0, m1] = spec.mean_range;
            let [s0, s1] = spec.std_range;
            let mean = if m0 < m1 { rng.random_range(m0..m1) } else { m0 };
            let std = if s0 < s1 { rng.random_range(s0..s1) } else { s0 };
            Environment::Gaussian { mean, std }
        })
        .collect()
}

/// Largest expected pairwise disagreement of a labeler panel under one environment.
pub(crate) fn population_diameter(
    env: &Environment,
    labelers: &[Labeler],
    quad: &QuadratureConfig,
) -> credal_core::Result<f64> {
    let mut best = 0.0_f64;
    for a in 0..labelers.len() {
        for b in a + 1..labelers.len() {
            best = best.max(expected_conditional_tv(env, &labelers[a], &labelers[b], quad)?);
        }
    }
    Ok(best)
}

pub(crate) fn plug_in(samples: &[AnnotatedSample], kind: LabelKind) -> credal_core::Result<f64> {
    let m = match kind {
        LabelKind::Hard => empirical_disagreement_hard(samples)?,
        LabelKind::Soft => empirical_disagreement_soft(samples)?,
    };
    Ok(m.eta_hat)
}
