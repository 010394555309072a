//! Total-variation distances between covariate laws, label laws and joints.

use super::environment::Environment;
use super::labeler::{check_simplex, Labeler};
use super::normal::{normal_density_crossings, normal_pdf, std_normal_cdf};
use super::quadrature::{gaussian_expectation, integrate, sign_changes, QuadratureConfig, Shape};
use crate::error::{CredalError, Result};

/// Tolerance on user-supplied probability vectors.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Resolution of the sign-change scan that locates kinks of `|f − g|`.
const ROOT_SCAN: usize = 4096;

pub(crate) fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

pub(crate) fn half_l1(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `½‖p − q‖₁` for two probability vectors.
pub fn tv_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(CredalError::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if p.is_empty() {
        return Err(CredalError::Empty("probability vectors".into()));
    }
    check_simplex(p, SIMPLEX_TOL)?;
    check_simplex(q, SIMPLEX_TOL)?;
    Ok(clamp_unit(half_l1(p, q)))
}

/// Equal-variance Gaussian TV, `2Φ(|Δμ| / 2σ) − 1`, written in the
/// cancellation-free form `1 − 2Φ(−|Δμ| / 2σ)`.
pub fn gaussian_tv_equal_std(m1: f64, m2: f64, std: f64) -> f64 {
    clamp_unit(1.0 - 2.0 * std_normal_cdf(-(m1 - m2).abs() / (2.0 * std)))
}

fn require_valid_env(e: &Environment) -> Result<()> {
    e.validate()
}

fn require_same_classes(l1: &Labeler, l2: &Labeler) -> Result<()> {
    let (c1, c2) = (l1.class_count(), l2.class_count());
    if c1 != c2 {
        return Err(CredalError::ClassCountMismatch(c1, c2));
    }
    Ok(())
}

fn incompatible(e1: &Environment, e2: &Environment) -> CredalError {
    let kind = |e: &Environment| if e.is_discrete() { "discrete grid" } else { "gaussian" };
    CredalError::IncompatibleSupport(format!("{} vs {}", kind(e1), kind(e2)))
}

/// Merges two sorted point lists into their sorted union.
fn union_points(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x == y => {
                i += 1;
                j += 1;
                *x
            }
            (Some(x), Some(y)) if x < y => {
                i += 1;
                *x
            }
            (Some(x), None) => {
                i += 1;
                *x
            }
            (_, Some(y)) => {
                j += 1;
                *y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

fn weight_at(points: &[f64], weights: &[f64], x: f64) -> Option<f64> {
    points
        .binary_search_by(|p| p.total_cmp(&x))
        .ok()
        .map(|k| weights[k])
}

/// TV distance between two covariate distributions.
pub fn tv_env(e1: &Environment, e2: &Environment, cfg: &QuadratureConfig) -> Result<f64> {
    require_valid_env(e1)?;
    require_valid_env(e2)?;
    cfg.validate()?;
    match (e1, e2) {
        (
            Environment::Gaussian { mean: m1, std: s1 },
            Environment::Gaussian { mean: m2, std: s2 },
        ) => {
            if (s1 - s2).abs() <= 1e-12 * s1.max(*s2) {
                return Ok(gaussian_tv_equal_std(*m1, *m2, *s1));
            }
            let k = cfg.domain_halfwidth_sigmas;
            let lo = (m1 - k * s1).min(m2 - k * s2);
            let hi = (m1 + k * s1).max(m2 + k * s2);
            let cuts = normal_density_crossings(*m1, *s1, *m2, *s2);
            let v = integrate(
                |x| 0.5 * (normal_pdf(*m1, *s1, x) - normal_pdf(*m2, *s2, x)).abs(),
                lo,
                hi,
                &cuts,
                cfg,
            )?;
            Ok(clamp_unit(v))
        }
        (
            Environment::DiscreteGrid { points: p1, weights: w1 },
            Environment::DiscreteGrid { points: p2, weights: w2 },
        ) => {
            let support = union_points(p1, p2);
            let v: f64 = support
                .iter()
                .map(|&x| {
                    let a = weight_at(p1, w1, x).unwrap_or(0.0);
                    let b = weight_at(p2, w2, x).unwrap_or(0.0);
                    (a - b).abs()
                })
                .sum();
            Ok(clamp_unit(0.5 * v))
        }
        _ => Err(incompatible(e1, e2)),
    }
}

/// Pointwise TV between the label laws of two labelers at `x`.
pub fn conditional_tv(l1: &Labeler, l2: &Labeler, x: f64) -> Result<f64> {
    require_same_classes(l1, l2)?;
    if l1.is_tabular() || l2.is_tabular() {
        let p = l1.probs(x)?;
        let q = l2.probs(x)?;
        return Ok(clamp_unit(half_l1(&p, &q)));
    }
    Ok(clamp_unit((l1.positive_prob(x)? - l2.positive_prob(x)?).abs()))
}

fn off_grid_under_gaussian(env: &Environment, ls: &[&Labeler]) -> Result<()> {
    if let Environment::Gaussian { mean, .. } = env {
        if ls.iter().any(|l| l.is_tabular()) {
            // A continuous law never lands on a finite grid.
            return Err(CredalError::OffGrid(*mean));
        }
    }
    Ok(())
}

/// Breakpoints of `|P₁(Y=1|x) − P₂(Y=1|x)|` over `[lo, hi]`.
fn disagreement_breakpoints(l1: &Labeler, l2: &Labeler, lo: f64, hi: f64) -> Vec<f64> {
    let mut cuts = l1.breakpoints();
    cuts.extend(l2.breakpoints());
    cuts.extend(sign_changes(
        |x| l1.positive_prob(x).unwrap_or(0.0) - l2.positive_prob(x).unwrap_or(0.0),
        lo,
        hi,
        ROOT_SCAN,
    ));
    cuts
}

/// `E_{X ~ env}[conditional_tv(l1, l2, X)]`.
pub fn expected_conditional_tv(
    env: &Environment,
    l1: &Labeler,
    l2: &Labeler,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    require_valid_env(env)?;
    cfg.validate()?;
    require_same_classes(l1, l2)?;
    off_grid_under_gaussian(env, &[l1, l2])?;
    if l1 == l2 {
        return Ok(0.0);
    }
    match env {
        Environment::Gaussian { mean, std } => {
            let f = |x: f64| (l1.positive_prob(x).unwrap_or(0.0) - l2.positive_prob(x).unwrap_or(0.0)).abs();
            let v = if l1.is_piecewise_constant() && l2.is_piecewise_constant() {
                let mut cuts = l1.breakpoints();
                cuts.extend(l2.breakpoints());
                gaussian_expectation(*mean, *std, f, &cuts, Shape::PiecewiseConstant, cfg)?
            } else {
                let (lo, hi) = env.effective_range(cfg.domain_halfwidth_sigmas);
                let cuts = disagreement_breakpoints(l1, l2, lo, hi);
                let shape = if cuts.is_empty() { Shape::Smooth } else { Shape::General };
                gaussian_expectation(*mean, *std, f, &cuts, shape, cfg)?
            };
            Ok(clamp_unit(v))
        }
        Environment::DiscreteGrid { points, weights } => {
            let mut acc = 0.0;
            for (x, w) in points.iter().zip(weights) {
                acc += w * conditional_tv(l1, l2, *x)?;
            }
            Ok(clamp_unit(acc))
        }
    }
}

/// Grid estimate of `sup_x conditional_tv(l1, l2, x)` over `[lo, hi]`.
///
/// A uniform grid is followed by one refinement pass around the best point.
/// Labeler breakpoints inside the domain are probed directly so that thin
/// disagreement regions are not stepped over. The result can only
/// under-estimate the true supremum.
pub fn sup_conditional_tv(l1: &Labeler, l2: &Labeler, lo: f64, hi: f64, grid_n: usize) -> Result<f64> {
    require_same_classes(l1, l2)?;
    if grid_n < 256 {
        return Err(CredalError::invalid(format!("grid_n must be at least 256, got {grid_n}")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CredalError::Empty(format!("degenerate domain [{lo}, {hi}]")));
    }
    if l1.is_tabular() || l2.is_tabular() {
        let mut pts: Vec<f64> = Vec::new();
        for l in [l1, l2] {
            if let Labeler::Tabular { grid, .. } = l {
                pts.extend(grid.iter().copied().filter(|x| *x >= lo && *x <= hi));
            }
        }
        if pts.is_empty() {
            return Err(CredalError::Empty("no tabular grid point inside the domain".into()));
        }
        return sup_conditional_tv_points(l1, l2, &pts);
    }
    if l1 == l2 {
        return Ok(0.0);
    }
    let h = (hi - lo) / (grid_n - 1) as f64;
    let mut best = 0.0_f64;
    let mut best_x = lo;
    for k in 0..grid_n {
        let x = lo + k as f64 * h;
        let v = conditional_tv(l1, l2, x)?;
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let (a, b) = ((best_x - h).max(lo), (best_x + h).min(hi));
    let h2 = (b - a) / (grid_n - 1) as f64;
    for k in 0..grid_n {
        best = best.max(conditional_tv(l1, l2, a + k as f64 * h2)?);
    }
    for c in l1.breakpoints().into_iter().chain(l2.breakpoints()) {
        for x in [c, c.next_up()] {
            if x >= lo && x <= hi {
                best = best.max(conditional_tv(l1, l2, x)?);
            }
        }
    }
    Ok(best)
}

/// Maximum of `conditional_tv` over an explicit list of points.
pub fn sup_conditional_tv_points(l1: &Labeler, l2: &Labeler, points: &[f64]) -> Result<f64> {
    if points.is_empty() {
        return Err(CredalError::Empty("no evaluation points".into()));
    }
    let mut best = 0.0_f64;
    for &x in points {
        best = best.max(conditional_tv(l1, l2, x)?);
    }
    Ok(best)
}

/// TV distance between the joints `e1 ⊗ l1` and `e2 ⊗ l2`.
pub fn joint_tv_exact(
    e1: &Environment,
    l1: &Labeler,
    e2: &Environment,
    l2: &Labeler,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    require_valid_env(e1)?;
    require_valid_env(e2)?;
    cfg.validate()?;
    require_same_classes(l1, l2)?;
    off_grid_under_gaussian(e1, &[l1])?;
    off_grid_under_gaussian(e2, &[l2])?;
    if e1 == e2 && l1 == l2 {
        return Ok(0.0);
    }
    match (e1, e2) {
        (
            Environment::Gaussian { mean: m1, std: s1 },
            Environment::Gaussian { mean: m2, std: s2 },
        ) => {
            let k = cfg.domain_halfwidth_sigmas;
            let lo = (m1 - k * s1).min(m2 - k * s2);
            let hi = (m1 + k * s1).max(m2 + k * s2);
            let q1 = |x: f64| l1.positive_prob(x).unwrap_or(0.0);
            let q2 = |x: f64| l2.positive_prob(x).unwrap_or(0.0);
            let pos = |x: f64| normal_pdf(*m1, *s1, x) * q1(x) - normal_pdf(*m2, *s2, x) * q2(x);
            let neg = |x: f64| normal_pdf(*m1, *s1, x) * (1.0 - q1(x)) - normal_pdf(*m2, *s2, x) * (1.0 - q2(x));
            let mut cuts = l1.breakpoints();
            cuts.extend(l2.breakpoints());
            cuts.extend(normal_density_crossings(*m1, *s1, *m2, *s2));
            cuts.extend(sign_changes(pos, lo, hi, ROOT_SCAN));
            cuts.extend(sign_changes(neg, lo, hi, ROOT_SCAN));
            let v = integrate(|x| 0.5 * (pos(x).abs() + neg(x).abs()), lo, hi, &cuts, cfg)?;
            Ok(clamp_unit(v))
        }
        (
            Environment::DiscreteGrid { points: p1, weights: w1 },
            Environment::DiscreteGrid { points: p2, weights: w2 },
        ) => {
            let c = l1.class_count();
            let support = union_points(p1, p2);
            let mut acc = 0.0;
            for &x in &support {
                let a = match weight_at(p1, w1, x) {
                    Some(w) => l1.probs(x)?.into_iter().map(|p| w * p).collect(),
                    None => vec![0.0; c],
                };
                let b = match weight_at(p2, w2, x) {
                    Some(w) => l2.probs(x)?.into_iter().map(|p| w * p).collect(),
                    None => vec![0.0; c],
                };
                acc += half_l1(&a, &b);
            }
            Ok(clamp_unit(acc))
        }
        _ => Err(incompatible(e1, e2)),
    }
}
