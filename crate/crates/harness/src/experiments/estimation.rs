//! Finite-sample experiments on the plug-in diameter estimator.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;

use credal_core::estimation::{
    certificate as make_certificate, empirical_disagreement_hard, empirical_disagreement_soft, hoeffding_epsilon,
    noisy_closed_form, read_annotations, Certificate, DisagreementMatrix, LabelKind,
};
use credal_core::synthgen::{block_mechanisms, interval_mechanisms, sample_annotated};
use credal_core::Labeler;
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{plug_in, population_diameter, random_gaussians, Ctx};
use crate::config::{default_regime, ExperimentConfig, ExperimentKind, MechanismMethod};
use crate::error::{HarnessError, Result};
use crate::rows::{Metrics, ResultRow};
use crate::summary::Summary;

struct LabelerSet {
    name: String,
    labelers: Vec<Labeler>,
    kind: LabelKind,
}

pub(super) fn diameter_ablation(ctx: &Ctx<'_>) -> Result<Vec<ResultRow>> {
    let p = ctx.cfg.diameter_ablation.as_ref().expect("validated");
    let mut envs = random_gaussians(&p.random_envs, ctx.seed(0));
    envs.extend(p.extra_environments.iter().cloned());
    let mut sets = Vec::new();
    if !p.thresholds.is_empty() {
        sets.push(LabelerSet {
            name: "hard".into(),
            labelers: p.thresholds.iter().map(|&t| Labeler::threshold(t)).collect(),
            kind: LabelKind::Hard,
        });
    }
    for &kappa in &p.probit_kappas {
        sets.push(LabelerSet {
            name: format!("probit_kappa={kappa}"),
            labelers: p.probit_biases.iter().map(|&b| Labeler::probit(kappa, b)).collect(),
            kind: LabelKind::Soft,
        });
    }
    let (e_count, reps) = (envs.len(), p.replications);
    let mut rows = Vec::with_capacity(sets.len() * e_count * reps);
    for (si, set) in sets.iter().enumerate() {
        let analytic: Vec<f64> = envs
            .par_iter()
            .enumerate()
            .map(|(e, env)| {
                let index = ((si * e_count + e) * reps) as u64;
                population_diameter(env, &set.labelers, ctx.quad()).map_err(ctx.at(index))
            })
            .collect::<Result<_>>()?;
        let block: Vec<ResultRow> = (0..e_count * reps)
            .into_par_iter()
            .map(|k| {
                let (e, index) = (k / reps, (si * e_count * reps + k) as u64);
                let samples = sample_annotated(&envs[e], &set.labelers, p.n, set.kind, ctx.seed(index + 1))
                    .map_err(ctx.at(index))?;
                let empirical = plug_in(&samples, set.kind).map_err(ctx.at(index))?;
                let gap = empirical - analytic[e];
                Ok(ctx.row(
                    index,
                    set.name.clone(),
                    Metrics::new()
                        .real("analytic", analytic[e])
                        .real("empirical", empirical)
                        .real("gap", gap)
                        .real("abs_gap", gap.abs()),
                ))
            })
            .collect::<Result<_>>()?;
        rows.extend(block);
    }
    Ok(rows)
}

/// Annotator noise rates are drawn per replication, uniform on `[0, eps_max]`.
pub(super) fn noise_ablation(ctx: &Ctx<'_>) -> Result<Vec<ResultRow>> {
    let p = ctx.cfg.noise_ablation.as_ref().expect("validated");
    let reps = p.replications;
    (0..p.eps_max.len() * reps)
        .into_par_iter()
        .map(|k| {
            let eps_max = p.eps_max[k / reps];
            let index = k as u64;
            let seed = ctx.seed(index);
            let mut rng = seed.child(0).rng();
            let eps: Vec<f64> = (0..p.annotators)
                .map(|_| if eps_max > 0.0 { rng.random_range(0.0..=eps_max) } else { 0.0 })
                .collect();
            let labelers = eps
                .iter()
                .map(|&e| Labeler::noisy(Labeler::threshold(p.truth_threshold), e))
                .collect::<credal_core::Result<Vec<_>>>()
                .map_err(ctx.at(index))?;
            let (truth, bound) = noisy_closed_form(&eps).map_err(ctx.at(index))?;
            let samples = sample_annotated(&p.environment, &labelers, p.n, LabelKind::Hard, seed.child(1))
                .map_err(ctx.at(index))?;
            let empirical = plug_in(&samples, LabelKind::Hard).map_err(ctx.at(index))?;
            let (gap, slack) = (empirical - truth, empirical - bound);
            Ok(ctx.row(
                index,
                format!("eps_max={eps_max}"),
                Metrics::new()
                    .real("true_diameter", truth)
                    .real("upper_bound", bound)
                    .real("empirical", empirical)
                    .real("gap", gap)
                    .real("abs_gap", gap.abs())
                    .real("slack", slack)
                    .real("abs_slack", slack.abs())
                    .flag("exceeds_upper", empirical > bound),
            ))
        })
        .collect()
}

/// Table of gap statistics per group, with RMSE computed from the rows.
pub(super) fn gap_derived(summary: &Summary, rows: &[ResultRow]) -> Value {
    let mut sq: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut gaps: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in rows {
        if let Some(g) = r.real("gap") {
            gaps.entry(r.group.as_str()).or_default().push(g);
        }
    }
    for (g, v) in &mut gaps {
        v.sort_by(f64::total_cmp);
        sq.insert(g, (v.iter().map(|x| x * x).sum::<f64>(), v.len()));
    }
    let mut out = serde_json::Map::new();
    for (group, metrics) in &summary.groups {
        let mut entry = serde_json::Map::new();
        if let Some(a) = metrics.get("abs_gap").and_then(|m| m.as_real()) {
            entry.insert("mean_abs_gap".into(), json!(a.mean));
            entry.insert("median_abs_gap".into(), json!(a.median));
            entry.insert("q90_abs_gap".into(), json!(a.q90));
            entry.insert("q95_abs_gap".into(), json!(a.q95));
            entry.insert("q99_abs_gap".into(), json!(a.q99));
        }
        if let Some(&(s, n)) = sq.get(group.as_str()) {
            entry.insert("rmse".into(), json!((s / n as f64).sqrt()));
        }
        for (name, m) in metrics {
            match (m.as_real(), m.as_flag()) {
                (Some(s), _) if name != "abs_gap" => {
                    entry.insert(format!("mean_{name}"), json!(s.mean));
                }
                (_, Some(f)) => {
                    entry.insert(format!("{name}_rate"), json!(f.rate));
                }
                _ => {}
            }
        }
        out.insert(group.clone(), Value::Object(entry));
    }
    Value::Object(out)
}

fn concentration_row(
    ctx: &Ctx<'_>,
    index: u64,
    group: String,
    population: f64,
    eta_hat: f64,
    eps: f64,
) -> ResultRow {
    let err = (eta_hat - population).abs();
    ctx.row(
        index,
        group,
        Metrics::new()
            .real("population", population)
            .real("eta_hat", eta_hat)
            .real("err", err)
            .real("eps_hoeff", eps)
            .flag("viol", err > eps),
    )
}

pub(super) fn sample_complexity(ctx: &Ctx<'_>) -> Result<Vec<ResultRow>> {
    let p = ctx.cfg.sample_complexity.as_ref().expect("validated");
    let population = population_diameter(&p.environment, &p.labelers, ctx.quad())?;
    let reps = p.replications;
    let k = p.labelers.len();
    (0..p.n_values.len() * reps)
        .into_par_iter()
        .map(|idx| {
            let n = p.n_values[idx / reps];
            let index = idx as u64;
            let at = ctx.at(index);
            let eps = hoeffding_epsilon(n, k, ctx.cfg.delta).map_err(&at)?;
            let samples = sample_annotated(&p.environment, &p.labelers, n, p.kind, ctx.seed(index)).map_err(&at)?;
            let eta_hat = plug_in(&samples, p.kind).map_err(&at)?;
            Ok(concentration_row(ctx, index, format!("n={n}"), population, eta_hat, eps))
        })
        .collect()
}

pub(super) fn mechanism_complexity(ctx: &Ctx<'_>) -> Result<Vec<ResultRow>> {
    let p = ctx.cfg.mechanism_complexity.as_ref().expect("validated");
    let reps = p.replications;
    let mut rows = Vec::with_capacity(p.n_y_values.len() * reps);
    for (i, &n_y) in p.n_y_values.iter().enumerate() {
        let base = (i * reps) as u64;
        let family = match p.method {
            MechanismMethod::Interval => interval_mechanisms(n_y, &p.environment, p.pinned_mass),
            MechanismMethod::Block => block_mechanisms(n_y, &p.environment, p.growth),
        }
        .map_err(ctx.at(base))?;
        let eps = hoeffding_epsilon(p.n, n_y, ctx.cfg.delta).map_err(ctx.at(base))?;
        let block: Vec<ResultRow> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let index = base + r as u64;
                let samples = sample_annotated(&p.environment, &family.labelers, p.n, LabelKind::Hard, ctx.seed(index))
                    .map_err(ctx.at(index))?;
                let eta_hat = plug_in(&samples, LabelKind::Hard).map_err(ctx.at(index))?;
                Ok(concentration_row(
                    ctx,
                    index,
                    format!("n_y={n_y}"),
                    family.implied_eta_star,
                    eta_hat,
                    eps,
                ))
            })
            .collect::<Result<_>>()?;
        rows.extend(block);
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Per-size table in the layout of the concentration tables: error quantiles,
/// Hoeffding radius, violation rate with its Wilson bound, and tightness.
pub(super) fn concentration_derived(cfg: &ExperimentConfig, summary: &Summary) -> Value {
    let (label, sizes): (&str, Vec<usize>) = match cfg.experiment {
        ExperimentKind::SampleComplexity => ("n", cfg.sample_complexity.as_ref().expect("validated").n_values.clone()),
        _ => ("n_y", cfg.mechanism_complexity.as_ref().expect("validated").n_y_values.clone()),
    };
    let mut table = Vec::new();
    let mut medians = Vec::new();
    for s in sizes {
        let g = format!("{label}={s}");
        let (Some(err), Some(eps), Some(viol), Some(eta)) = (
            summary.real(&g, "err"),
            summary.real(&g, "eps_hoeff"),
            summary.flag(&g, "viol"),
            summary.real(&g, "eta_hat"),
        ) else {
            continue;
        };
        medians.push((s as f64, err.median));
        table.push(json!({
            label: s,
            "mean_eta_hat": eta.mean,
            "q50_err": err.median,
            "q95_err": err.q95,
            "eps_hoeff": eps.mean,
            "p_viol": viol.rate,
            "wilson_high": viol.wilson_high,
            "tightness_ratio": eps.mean / err.q95,
        }));
    }
    let mut out = json!({ "delta": cfg.delta, "rows": table });
    if label == "n" && medians.len() >= 2 {
        out["log_log_slope_q50"] = json!(log_log_slope(&medians));
    }
    out
}

/// Certificate for the configured annotation file, with the full
/// disagreement matrix it was computed from.
pub fn compute_certificate(cfg: &ExperimentConfig) -> Result<(Certificate, DisagreementMatrix)> {
    let p = cfg
        .certificate
        .as_ref()
        .ok_or_else(|| HarnessError::Config("missing [certificate] table".into()))?;
    let file = File::open(&p.annotations).map_err(|e| HarnessError::io(&p.annotations, e))?;
    let set = read_annotations(BufReader::new(file))?;
    let matrix = match set.kind {
        LabelKind::Hard => empirical_disagreement_hard(&set.samples)?,
        LabelKind::Soft => empirical_disagreement_soft(&set.samples)?,
    };
    let regime = p.regime.unwrap_or_else(|| default_regime(set.kind));
    let cert = make_certificate(&matrix, cfg.delta, regime, p.eps_star)?;
    Ok((cert, matrix))
}

pub(super) fn certificate(ctx: &Ctx<'_>) -> Result<Vec<ResultRow>> {
    let (c, _) = compute_certificate(ctx.cfg)?;
    Ok(vec![ctx.row(
        0,
        c.regime.as_str(),
        Metrics::new()
            .real("n", c.n as f64)
            .real("k", c.k as f64)
            .real("eta_hat", c.eta_hat)
            .real("epsilon", c.epsilon)
            .real("penalty_upper", c.penalty_upper)
            .real("total_bound", c.total_bound()),
    )])
}

pub(super) fn certificate_derived(cfg: &ExperimentConfig) -> Result<Value> {
    let (c, m) = compute_certificate(cfg)?;
    Ok(json!({ "certificate": c, "argmax_pair": m.argmax, "disagreement": m.values }))
}
