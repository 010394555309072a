//! Robust-learning experiments: the two-world lower-bound instance and
//! min-max training against brute force.

use credal_core::dro::{brute_force_minimax, train, world_risks, Hypothesis, TrainConfig, TrainMode};
use credal_core::synthgen::minimax_instance;
use credal_core::CredalSpec;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::Ctx;
use crate::error::Result;
use crate::rows::{Metrics, ResultRow};
use crate::summary::Summary;

/// Slack on the risk-sum identity, which is exact up to normal-CDF rounding.
pub const RISK_SUM_TOL: f64 = 1e-9;
/// Slack on the `eta / 2` floor of the robust risk over a finite grid.
pub const FLOOR_TOL: f64 = 1e-3;

fn threshold_grid(thetas: &[f64]) -> Vec<Hypothesis> {
    thetas
        .iter()
        .flat_map(|&theta| [1i8, -1].map(|orientation| Hypothesis::ThresholdClassifier { theta, orientation }))
        .collect()
}

pub(super) fn minimax_demo(ctx: &Ctx<'_>) -> Result<Vec<ResultRow>> {
    let p = ctx.cfg.minimax_demo.as_ref().expect("validated");
    let hyps = threshold_grid(&p.theta_grid.values());
    let mut rows = Vec::with_capacity(p.etas.len() * hyps.len());
    for (e, &eta) in p.etas.iter().enumerate() {
        let base = (e * hyps.len()) as u64;
        let spec = minimax_instance(eta, &p.environment).map_err(ctx.at(base))?;
        let block: Vec<ResultRow> = hyps
            .par_iter()
            .enumerate()
            .map(|(k, h)| {
                let index = base + k as u64;
                let wr = world_risks(h, &spec, ctx.quad()).map_err(ctx.at(index))?;
                let (r1, r2) = (wr.risks[0][0], wr.risks[0][1]);
                let (theta, orientation) = match h {
                    Hypothesis::ThresholdClassifier { theta, orientation } => (*theta, f64::from(*orientation)),
                    Hypothesis::LinearLogistic { .. } => unreachable!("grid holds thresholds only"),
                };
                Ok(ctx.row(
                    index,
                    format!("eta={eta}"),
                    Metrics::new()
                        .real("eta", eta)
                        .real("theta", theta)
                        .real("orientation", orientation)
                        .real("risk_never", r1)
                        .real("risk_cut", r2)
                        .real("risk_sum", r1 + r2)
                        .real("worst", wr.worst_value)
                        .flag("sum_below_eta", r1 + r2 < eta - RISK_SUM_TOL)
                        .flag("below_floor", wr.worst_value < eta / 2.0 - FLOOR_TOL),
                ))
            })
            .collect::<Result<_>>()?;
        rows.extend(block);
    }
    Ok(rows)
}

pub(super) fn minimax_derived(summary: &Summary) -> Value {
    let table: Vec<Value> = summary
        .groups
        .keys()
        .filter_map(|g| {
            let eta = summary.real(g, "eta")?.mean;
            Some(json!({
                "eta": eta,
                "robust_risk_min": summary.real(g, "worst")?.min,
                "floor": eta / 2.0,
                "risk_sum_min": summary.real(g, "risk_sum")?.min,
                "sum_violations": summary.flag(g, "sum_below_eta")?.successes,
                "floor_violations": summary.flag(g, "below_floor")?.successes,
            }))
        })
        .collect();
    json!({ "instances": table })
}

struct Run {
    name: String,
    cfg: TrainConfig,
}

/// Trace rows for every training run, then one row per run comparing its
/// final worst-world risk with the brute-force optimum and the hypothesis
/// that minimizes average risk over worlds.
pub(super) fn dro_train(ctx: &Ctx<'_>) -> Result<Vec<ResultRow>> {
    let p = ctx.cfg.dro_train.as_ref().expect("validated");
    let spec = CredalSpec::new(p.environments.clone(), p.labelers.clone())?;
    let base = TrainConfig {
        step_size: p.step_size,
        steps: p.steps,
        seed: ctx.cfg.seed,
        temperature: p.temperature,
        ..TrainConfig::default()
    };
    let mut runs = Vec::new();
    if p.greedy {
        runs.push(Run {
            name: "greedy".into(),
            cfg: TrainConfig {
                mode: TrainMode::Greedy,
                tau: None,
                ..base.clone()
            },
        });
    }
    for &tau in &p.taus {
        runs.push(Run {
            name: format!("lse_tau={tau}"),
            cfg: TrainConfig {
                mode: TrainMode::Lse,
                tau: Some(tau),
                ..base.clone()
            },
        });
    }

    // Indices: run r owns [r · stride, (r + 1) · stride); summary rows follow.
    let stride = (p.steps + 2) as u64;
    let summary_base = runs.len() as u64 * stride;
    let thetas = p.theta_grid.values();
    let (_, oracle) = brute_force_minimax(&spec, &thetas, ctx.quad()).map_err(ctx.at(summary_base))?;

    // Average-risk baseline over the same grid.
    let hyps = threshold_grid(&thetas);
    let scored: Vec<(f64, f64)> = hyps
        .par_iter()
        .map(|h| {
            let wr = world_risks(h, &spec, ctx.quad())?;
            let avg = wr.risks.iter().flatten().sum::<f64>() / wr.world_count() as f64;
            Ok((avg, wr.worst_value))
        })
        .collect::<credal_core::Result<_>>()
        .map_err(ctx.at(summary_base))?;
    let (erm_avg, erm_worst) = scored
        .iter()
        .copied()
        .fold((f64::INFINITY, f64::NAN), |acc, s| if s.0 < acc.0 { s } else { acc });

    let w = spec.vertex_count() as f64;
    let traced: Vec<Vec<ResultRow>> = runs
        .par_iter()
        .enumerate()
        .map(|(r, run)| {
            let start = r as u64 * stride;
            let out = train(&spec, &run.cfg, ctx.quad()).map_err(ctx.at(start))?;
            let mut rows: Vec<ResultRow> = out
                .trace
                .iter()
                .enumerate()
                .map(|(step, wr)| {
                    let mut m = Metrics::new().real("step", step as f64).real("worst", wr.worst_value);
                    if let (Some(v), Some(tau)) = (wr.lse_value, run.cfg.tau) {
                        let inside = v >= wr.worst_value - 1e-12 && v <= wr.worst_value + tau * w.ln() + 1e-12;
                        m = m.real("lse", v).flag("sandwich_ok", inside);
                    }
                    ctx.row(start + step as u64, format!("trace/{}", run.name), m)
                })
                .collect();
            let final_worst = world_risks(&out.hypothesis, &spec, ctx.quad())
                .map_err(ctx.at(start))?
                .worst_value;
            rows.push(ctx.row(
                summary_base + 1 + r as u64,
                format!("final/{}", run.name),
                Metrics::new()
                    .real("final_worst", final_worst)
                    .real("oracle", oracle)
                    .real("gap_to_oracle", final_worst - oracle)
                    .real("avg_erm_worst", erm_worst)
                    .real("surrogate", out.surrogate_objective)
                    .real("steps_run", out.trace.len() as f64),
            ));
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<ResultRow> = traced.into_iter().flatten().collect();
    rows.push(ctx.row(
        summary_base,
        "baseline",
        Metrics::new()
            .real("oracle", oracle)
            .real("avg_erm_average", erm_avg)
            .real("avg_erm_worst", erm_worst)
            .real("worlds", w),
    ));
    Ok(rows)
}

pub(super) fn dro_derived(summary: &Summary) -> Value {
    let mut runs = serde_json::Map::new();
    for g in summary.groups.keys() {
        let Some(name) = g.strip_prefix("final/") else {
            continue;
        };
        let trace = format!("trace/{name}");
        let sandwich = summary.flag(&trace, "sandwich_ok").map(|f| f.count - f.successes);
        runs.insert(
            name.to_string(),
            json!({
                "final_worst": summary.real(g, "final_worst").map(|s| s.mean),
                "gap_to_oracle": summary.real(g, "gap_to_oracle").map(|s| s.mean),
                "sandwich_failures": sandwich,
            }),
        );
    }
    json!({
        "oracle": summary.real("baseline", "oracle").map(|s| s.mean),
        "avg_erm_worst": summary.real("baseline", "avg_erm_worst").map(|s| s.mean),
        "runs": runs,
    })
}
