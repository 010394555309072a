//! Distance-bound experiments: the sliding-window gating curve and the
//! exhaustive pair sweep.

use credal_core::measures::joint_tv_exact;
use credal_core::{pairwise_bounds, CredalSpec, Environment, Labeler, Vertex};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{random_gaussians, Ctx};
use crate::config::LabelRegime;
use crate::error::Result;
use crate::rows::{Metrics, ResultRow};
use crate::summary::Summary;

pub(super) fn gating_curve(ctx: &Ctx<'_>) -> Result<Vec<ResultRow>> {
    let p = ctx.cfg.gating_curve.as_ref().expect("validated");
    let labelers = vec![
        Labeler::sigmoid(p.slope, p.boundaries[0]),
        Labeler::sigmoid(p.slope, p.boundaries[1]),
    ];
    let tol = 2.0 * ctx.quad().abs_tol;
    p.centres
        .values()
        .into_par_iter()
        .enumerate()
        .map(|(k, centre)| {
            let index = k as u64;
            let envs = vec![
                Environment::Gaussian {
                    mean: centre - p.window_offset / 2.0,
                    std: p.window_std,
                },
                Environment::Gaussian {
                    mean: centre + p.window_offset / 2.0,
                    std: p.window_std,
                },
            ];
            let spec = CredalSpec::new(envs, labelers.clone()).map_err(ctx.at(index))?;
            let b = pairwise_bounds(&spec, (0, 0), (1, 1), ctx.quad(), true).map_err(ctx.at(index))?;
            let joint = b.exact.expect("requested");
            Ok(ctx.row(
                index,
                "curve",
                Metrics::new()
                    .real("centre", centre)
                    .real("cov_tv", b.cov_dist)
                    .real("exp_dis_left", b.exp_dis_i)
                    .real("exp_dis_right", b.exp_dis_iprime)
                    .real("joint_tv", joint)
                    .real("lower", b.lower)
                    .real("upper", b.upper)
                    .flag("covered", joint >= b.lower - tol && joint <= b.upper + tol),
            ))
        })
        .collect()
}

pub(super) fn gating_derived(rows: &[ResultRow]) -> Value {
    let get = |r: &ResultRow, k: &str| r.real(k).unwrap_or(f64::NAN);
    let peak = rows
        .iter()
        .max_by(|a, b| get(a, "joint_tv").total_cmp(&get(b, "joint_tv")))
        .expect("non-empty");
    let cov: Vec<f64> = rows.iter().map(|r| get(r, "cov_tv")).collect();
    json!({
        "cov_tv_min": cov.iter().copied().fold(f64::INFINITY, f64::min),
        "cov_tv_max": cov.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "peak_centre": get(peak, "centre"),
        "peak_joint_tv": get(peak, "joint_tv"),
        "upper_dominates_everywhere": rows.iter().all(|r| r.flag("covered") == Some(true)),
    })
}

fn pair_class(a: Vertex, b: Vertex) -> &'static str {
    match (a.0 == b.0, a.1 == b.1) {
        (true, true) => "identical",
        (true, false) => "fixed_covariate",
        (false, true) => "fixed_labeler",
        (false, false) => "joint",
    }
}

pub(super) const PAIR_CLASSES: [&str; 4] = ["joint", "fixed_covariate", "fixed_labeler", "identical"];

fn regime_name(r: LabelRegime) -> &'static str {
    match r {
        LabelRegime::Soft => "soft",
        LabelRegime::Hard => "hard",
    }
}

/// Every ordered vertex pair of each regime. Bounds come from the closed
/// forms; the exact distance is always integrated on the joint space, so the
/// pure-shift identities are checked rather than assumed.
pub(super) fn bounds_sweep(ctx: &Ctx<'_>) -> Result<Vec<ResultRow>> {
    let p = ctx.cfg.bounds_sweep.as_ref().expect("validated");
    let mut envs: Vec<Environment> = p
        .grid_means
        .values()
        .into_iter()
        .map(|mean| Environment::Gaussian { mean, std: p.grid_std })
        .collect();
    envs.extend(random_gaussians(&p.random_envs, ctx.seed(0)));
    let tol = 2.0 * ctx.quad().abs_tol;
    let mut rows = Vec::new();
    for (ri, &regime) in p.regimes.iter().enumerate() {
        let labelers: Vec<Labeler> = p
            .labeler_grid
            .values()
            .into_iter()
            .map(|t| match regime {
                LabelRegime::Soft => Labeler::sigmoid(p.sigmoid_slope, t),
                LabelRegime::Hard => Labeler::threshold(t),
            })
            .collect();
        let spec = CredalSpec::new(envs.clone(), labelers)?;
        let verts: Vec<Vertex> = spec.vertices().collect();
        let v = verts.len();
        let base = (ri * v * v) as u64;
        // Distances are symmetric, so each unordered pair is computed once
        // and reported in both orders.
        let jobs: Vec<(usize, usize)> = (0..v).flat_map(|a| (a..v).map(move |b| (a, b))).collect();
        let computed: Vec<Vec<ResultRow>> = jobs
            .par_iter()
            .map(|&(a, b)| {
                let index = base + (a * v + b) as u64;
                let (va, vb) = (verts[a], verts[b]);
                let bounds = pairwise_bounds(&spec, va, vb, ctx.quad(), false).map_err(ctx.at(index))?;
                let exact = joint_tv_exact(
                    &spec.environments[va.0],
                    &spec.labelers[va.1],
                    &spec.environments[vb.0],
                    &spec.labelers[vb.1],
                    ctx.quad(),
                )
                .map_err(ctx.at(index))?;
                let group = format!("{}/{}", regime_name(regime), pair_class(va, vb));
                // The slack is measured against the bound as stated, before
                // capping at 1; the capped bound decides coverage.
                let upper_raw = bounds.cov_dist + bounds.exp_dis_i.min(bounds.exp_dis_iprime);
                let metrics = || {
                    Metrics::new()
                        .real("exact", exact)
                        .real("lower", bounds.lower)
                        .real("upper", bounds.upper)
                        .real("upper_raw", upper_raw)
                        .real("gap_low", exact - bounds.lower)
                        .real("gap_up", upper_raw - exact)
                        .real("gap_up_capped", bounds.upper - exact)
                        .flag("violation", exact < bounds.lower - tol || exact > bounds.upper + tol)
                };
                let mut out = vec![ctx.row(index, group.clone(), metrics())];
                if a != b {
                    out.push(ctx.row(base + (b * v + a) as u64, group, metrics()));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        rows.extend(computed.into_iter().flatten());
    }
    Ok(rows)
}

pub(super) fn bounds_derived(summary: &Summary) -> Value {
    let mut table = Vec::new();
    for regime in ["soft", "hard"] {
        for class in PAIR_CLASSES {
            let g = format!("{regime}/{class}");
            let (Some(lo), Some(up), Some(capped), Some(viol)) = (
                summary.real(&g, "gap_low"),
                summary.real(&g, "gap_up"),
                summary.real(&g, "gap_up_capped"),
                summary.flag(&g, "violation"),
            ) else {
                continue;
            };
            table.push(json!({
                "regime": regime,
                "pair_class": class,
                "pairs": lo.count,
                "delta_low_mean": lo.mean,
                "delta_low_min": lo.min,
                "delta_low_max": lo.max,
                "delta_up_mean": up.mean,
                "delta_up_min": up.min,
                "delta_up_max": up.max,
                "delta_up_capped_mean": capped.mean,
                "violations": viol.successes,
            }));
        }
    }
    json!({ "pair_classes": table })
}
