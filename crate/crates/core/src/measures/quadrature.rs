//! Quadrature rules for one-dimensional expectations.
//!
//! Gaussian expectations of smooth integrands use Gauss–Hermite nodes. The
//! integrands met in this crate are usually only piecewise smooth (label
//! boundaries, crossings of two densities, kinks of `|·|`), so the workhorse
//! is adaptive Simpson on a truncated domain that is split at every known
//! breakpoint. Piecewise-constant integrands under a Gaussian are integrated
//! exactly through the normal CDF.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::normal::{normal_interval_mass, normal_pdf};
use crate::error::{CredalError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureMethod {
    GaussHermite,
    AdaptiveSimpson,
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub method: QuadratureMethod,
    /// Gauss–Hermite node count; also scales the evaluation budget of the
    /// adaptive rules and the panel count of the grid rule.
    pub node_count: usize,
    pub abs_tol: f64,
    /// Half-width, in standard deviations, of the truncated integration domain.
    pub domain_halfwidth_sigmas: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            method: QuadratureMethod::GaussHermite,
            node_count: 128,
            abs_tol: 1e-9,
            domain_halfwidth_sigmas: 8.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 16 {
            return Err(CredalError::invalid(format!(
                "node_count must be at least 16, got {}",
                self.node_count
            )));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol <= 1e-4) {
            return Err(CredalError::invalid(format!(
                "abs_tol must lie in (0, 1e-4], got {}",
                self.abs_tol
            )));
        }
        if !(self.domain_halfwidth_sigmas.is_finite() && self.domain_halfwidth_sigmas > 0.0) {
            return Err(CredalError::invalid(
                "domain_halfwidth_sigmas must be positive and finite",
            ));
        }
        Ok(())
    }

    fn eval_budget(&self) -> usize {
        self.node_count.saturating_mul(4096)
    }
}

/// Shape of an integrand, used to pick a rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Shape {
    /// Smooth on the whole line (no breakpoints at all).
    Smooth,
    /// Constant between consecutive breakpoints.
    PiecewiseConstant,
    /// Anything else: smooth between breakpoints.
    General,
}

#[derive(Debug)]
pub struct HermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Hermite rule for the weight `exp(-x²)`, cached per node count.
pub fn gauss_hermite(n: usize) -> Arc<HermiteRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<HermiteRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("hermite cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(hermite_rule(n)))
        .clone()
}

/// Orthonormal Hermite recurrence at `x`, rescaled to stay finite.
///
/// Returns `(p_n, p_{n-1}, Σ_{k<n} p_k², log_scale)`, where every value is
/// the true one times `exp(-log_scale)` (squared for the sum).
fn hermite_eval(n: usize, x: f64) -> (f64, f64, f64, f64) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    const BIG: f64 = 1e100;
    let mut prev = 0.0;
    let mut p = PIM4;
    let mut sum = p * p;
    let mut log_scale = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let next = x * (2.0 / jf).sqrt() * p - ((jf - 1.0) / jf).sqrt() * prev;
        prev = p;
        p = next;
        if j < n {
            sum += p * p;
        }
        if p.abs() > BIG {
            p /= BIG;
            prev /= BIG;
            sum /= BIG * BIG;
            log_scale += BIG.ln();
        }
    }
    (p, prev, sum, log_scale)
}

fn hermite_rule(n: usize) -> HermiteRule {
    // Positive roots are bracketed by a scan finer than the smallest root
    // gap, polished by safeguarded Newton, and weighted by the Christoffel
    // function, which stays accurate for large n.
    let nf = n as f64;
    let x_max = (2.0 * nf + 1.0).sqrt() + 1.0;
    let step = std::f64::consts::PI / (8.0 * (2.0 * nf + 1.0).sqrt());
    let mut pos = Vec::with_capacity(n / 2 + 1);
    if n % 2 == 1 {
        pos.push(0.0);
    }
    let mut a = if n % 2 == 1 { step * 0.5 } else { 0.0 };
    let mut fa = hermite_eval(n, a).0;
    while a < x_max && pos.len() < n.div_ceil(2) {
        let b = a + step;
        let fb = hermite_eval(n, b).0;
        if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            let mut z = 0.5 * (lo + hi);
            for _ in 0..100 {
                let (p, pm1, _, _) = hermite_eval(n, z);
                if p == 0.0 {
                    break;
                }
                if flo * p < 0.0 {
                    hi = z;
                } else {
                    lo = z;
                    flo = p;
                }
                let dp = (2.0 * nf).sqrt() * pm1;
                let newton = z - p / dp;
                let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                if (next - z).abs() <= 1e-15 * z.abs().max(1.0) {
                    z = next;
                    break;
                }
                z = next;
            }
            pos.push(z);
        }
        a = b;
        fa = fb;
    }
    let weight = |x: f64| {
        let (_, _, sum, log_scale) = hermite_eval(n, x);
        (-2.0 * log_scale).exp() / sum
    };
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &z in pos.iter().rev() {
        if z > 0.0 {
            nodes.push(-z);
            weights.push(weight(z));
        }
    }
    for &z in &pos {
        nodes.push(z);
        weights.push(weight(z));
    }
    HermiteRule { nodes, weights }
}

/// `E[f(X)]` for `X ~ N(mean, std²)` using Gauss–Hermite.
pub fn hermite_expectation(mean: f64, std: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_hermite(n);
    let scale = std::f64::consts::SQRT_2 * std;
    let norm = 1.0 / std::f64::consts::PI.sqrt();
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &wt)| wt * f(mean + scale * t))
        .sum::<f64>()
        * norm
}

const MAX_DEPTH: u32 = 48;
/// Levels a panel must be split before its error estimate is trusted; the
/// five-point estimate alone can cancel by accident on smooth bumps.
const MIN_LEVELS: u32 = 2;

struct Simpson<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    budget: usize,
    used: usize,
    residual: f64,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        self.used += 2;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        let settled = depth <= MAX_DEPTH - MIN_LEVELS && delta.abs() <= 15.0 * tol;
        if settled || depth == 0 || (b - a) < 1e-12 * (1.0 + a.abs()) {
            if depth == 0 {
                self.residual += delta.abs() / 15.0;
            }
            return left + right + delta / 15.0;
        }
        if self.used >= self.budget {
            self.residual += delta.abs() / 15.0;
            return left + right + delta / 15.0;
        }
        self.recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + self.recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson on `[lo, hi]`, split at `breakpoints` and pre-divided
/// into uniform panels so that narrow features are not skipped.
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    pieces: &[(f64, f64)],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let panels_per_piece = (cfg.node_count / 8).max(4);
    let n_panels = pieces.len() * panels_per_piece;
    let tol = cfg.abs_tol / n_panels as f64;
    let mut s = Simpson {
        f,
        budget: cfg.eval_budget(),
        used: 0,
        residual: 0.0,
    };
    let mut total = 0.0;
    for &(a, b) in pieces {
        let h = (b - a) / panels_per_piece as f64;
        for k in 0..panels_per_piece {
            let pa = a + k as f64 * h;
            let pb = if k + 1 == panels_per_piece { b } else { pa + h };
            let fa = f(pa);
            let fb = f(pb);
            let fm = f(0.5 * (pa + pb));
            s.used += 3;
            let whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
            total += s.recurse(pa, pb, fa, fm, fb, whole, tol, MAX_DEPTH);
        }
    }
    if s.residual > cfg.abs_tol {
        return Err(CredalError::QuadratureNonConvergence {
            residual: s.residual,
            budget: s.budget,
        });
    }
    Ok(total)
}

fn composite_simpson(f: &impl Fn(f64) -> f64, pieces: &[(f64, f64)], panels: usize) -> f64 {
    let panels = panels + panels % 2;
    pieces
        .iter()
        .map(|&(a, b)| {
            let h = (b - a) / panels as f64;
            let mut acc = f(a) + f(b);
            for k in 1..panels {
                let coef = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += coef * f(a + k as f64 * h);
            }
            acc * h / 3.0
        })
        .sum()
}

/// Splits `[lo, hi]` at the breakpoints that fall strictly inside it.
pub(crate) fn split_domain(lo: f64, hi: f64, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > lo && *b < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + a.abs()));
    let mut pieces = Vec::with_capacity(cuts.len() + 1);
    let mut left = lo;
    for c in cuts {
        pieces.push((left, c));
        left = c;
    }
    pieces.push((left, hi));
    pieces
}

/// Integrates a piecewise-smooth `g` over `[lo, hi]` with the configured rule.
pub(crate) fn integrate(
    g: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let pieces = split_domain(lo, hi, breakpoints);
    match cfg.method {
        QuadratureMethod::Grid => Ok(composite_simpson(&g, &pieces, cfg.node_count)),
        QuadratureMethod::GaussHermite | QuadratureMethod::AdaptiveSimpson => {
            adaptive_simpson(&g, &pieces, cfg)
        }
    }
}

/// `E[f(X)]` for `X ~ N(mean, std²)`.
pub(crate) fn gaussian_expectation(
    mean: f64,
    std: f64,
    f: impl Fn(f64) -> f64,
    breakpoints: &[f64],
    shape: Shape,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    match shape {
        Shape::PiecewiseConstant => {
            let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|b| b.is_finite()).collect();
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            if cuts.is_empty() {
                return Ok(f(mean));
            }
            let mut total = 0.0;
            let first = cuts[0];
            total += f(first - 1.0) * normal_interval_mass(mean, std, f64::NEG_INFINITY, first);
            for w in cuts.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                total += f(mid) * normal_interval_mass(mean, std, w[0], w[1]);
            }
            let last = *cuts.last().unwrap();
            total += f(last + 1.0) * normal_interval_mass(mean, std, last, f64::INFINITY);
            Ok(total)
        }
        Shape::Smooth if cfg.method == QuadratureMethod::GaussHermite => {
            // Doubling the node count gives an error estimate; when the two
            // rules disagree the integrand is too sharp for Hermite and the
            // adaptive rule takes over.
            let coarse = hermite_expectation(mean, std, cfg.node_count, &f);
            let fine = hermite_expectation(mean, std, 2 * cfg.node_count, &f);
            if (fine - coarse).abs() <= 0.1 * cfg.abs_tol {
                return Ok(fine);
            }
            let half = cfg.domain_halfwidth_sigmas * std;
            integrate(|x| f(x) * normal_pdf(mean, std, x), mean - half, mean + half, &[], cfg)
        }
        _ => {
            let half = cfg.domain_halfwidth_sigmas * std;
            integrate(
                |x| f(x) * normal_pdf(mean, std, x),
                mean - half,
                mean + half,
                breakpoints,
                cfg,
            )
        }
    }
}

/// Roots of `g` on `[lo, hi]` located by a uniform scan plus bisection.
///
/// Stretches where `g` is exactly zero (disjoint supports, underflow) count
/// as one root, and only when the sign differs on their two sides.
pub(crate) fn sign_changes(g: impl Fn(f64) -> f64, lo: f64, hi: f64, scan: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let h = (hi - lo) / scan as f64;
    let mut xa = lo;
    let mut ga = g(xa);
    // Last nonzero sign seen and the first zero sample after it.
    let mut last_sign = if ga == 0.0 { 0.0 } else { ga.signum() };
    let mut zero_start = if ga == 0.0 { Some(xa) } else { None };
    for k in 1..=scan {
        let xb = if k == scan { hi } else { lo + k as f64 * h };
        let gb = g(xb);
        if gb == 0.0 {
            zero_start.get_or_insert(xb);
        } else {
            if let Some(z) = zero_start.take() {
                if last_sign != 0.0 && gb.signum() != last_sign {
                    roots.push(z);
                }
            } else if ga * gb < 0.0 {
                roots.push(bisect(&g, xa, xb, ga));
            }
            last_sign = gb.signum();
        }
        xa = xb;
        ga = gb;
    }
    roots
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let fm = g(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
        if b - a <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_integrates_low_moments() {
        let cfg = QuadratureConfig::default();
        let m0 = hermite_expectation(0.0, 1.0, cfg.node_count, |_| 1.0);
        let m2 = hermite_expectation(0.0, 1.0, cfg.node_count, |x| x * x);
        let m4 = hermite_expectation(1.5, 2.0, cfg.node_count, |x| (x - 1.5).powi(4));
        assert!((m0 - 1.0).abs() < 1e-13);
        assert!((m2 - 1.0).abs() < 1e-12);
        assert!((m4 - 3.0 * 16.0).abs() < 1e-10);
    }

    #[test]
    fn hermite_nodes_are_sorted_and_symmetric() {
        assert_eq!(gauss_hermite(513).nodes.len(), 513);
        let rule = gauss_hermite(128);
        assert_eq!(rule.nodes.len(), 128);
        for w in rule.nodes.windows(2) {
            assert!(w[0] < w[1]);
        }
        for i in 0..64 {
            assert!((rule.nodes[i] + rule.nodes[127 - i]).abs() < 1e-12);
        }
        assert!(rule.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn simpson_handles_a_step_at_a_breakpoint() {
        let cfg = QuadratureConfig {
            method: QuadratureMethod::AdaptiveSimpson,
            ..Default::default()
        };
        let v = integrate(|x| if x > 0.3 { 1.0 } else { 0.0 }, -1.0, 1.0, &[0.3], &cfg).unwrap();
        assert!((v - 0.7).abs() < 1e-12);
    }

    #[test]
    fn piecewise_constant_is_exact() {
        let cfg = QuadratureConfig::default();
        let v = gaussian_expectation(
            0.0,
            1.0,
            |x| if x > -1.0 && x <= 1.0 { 1.0 } else { 0.0 },
            &[-1.0, 1.0],
            Shape::PiecewiseConstant,
            &cfg,
        )
        .unwrap();
        assert!((v - 0.682_689_492_137_085_9).abs() < 1e-15);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let cfg = QuadratureConfig {
            method: QuadratureMethod::AdaptiveSimpson,
            node_count: 16,
            abs_tol: 1e-15,
            domain_halfwidth_sigmas: 8.0,
        };
        let err = integrate(|x: f64| (1.0 / (x.abs() + 1e-9)).sin(), -1.0, 1.0, &[], &cfg);
        assert!(matches!(err, Err(CredalError::QuadratureNonConvergence { .. })));
    }

    #[test]
    fn sign_change_scan_finds_roots() {
        let r = sign_changes(|x| (x - 0.25) * (x + 1.5), -3.0, 3.0, 100);
        assert_eq!(r.len(), 2);
        assert!((r[0] + 1.5).abs() < 1e-12);
        assert!((r[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let bad = QuadratureConfig {
            node_count: 8,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureConfig {
            abs_tol: 1e-3,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
