//! Standard normal helpers.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF, accurate in both tails.
pub fn std_normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal upper tail `1 - Φ(z)` without cancellation.
pub fn std_normal_sf(z: f64) -> f64 {
    std_normal_cdf(-z)
}

pub fn std_normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Inverse of the standard normal CDF. Returns `±∞` at the endpoints.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // Halley steps against the accurate CDF polish the initial inverse.
    for _ in 0..2 {
        let pdf = std_normal_pdf(z);
        if pdf == 0.0 {
            break;
        }
        let err = if z > 0.0 { (1.0 - p) - std_normal_sf(z) } else { std_normal_cdf(z) - p };
        let u = err / pdf;
        z -= u / (1.0 + 0.5 * z * u);
    }
    z
}

/// Mass of N(mean, std²) on the interval `(a, b]`.
pub fn normal_interval_mass(mean: f64, std: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let za = (a - mean) / std;
    let zb = (b - mean) / std;
    // Work in the tail where both CDF values are small to avoid cancellation.
    if za > 0.0 {
        std_normal_sf(za) - std_normal_sf(zb)
    } else {
        std_normal_cdf(zb) - std_normal_cdf(za)
    }
}

pub fn normal_pdf(mean: f64, std: f64, x: f64) -> f64 {
    std_normal_pdf((x - mean) / std) / std
}

#[allow(dead_code)]
pub(crate) fn normal_log_pdf(mean: f64, std: f64, x: f64) -> f64 {
    let z = (x - mean) / std;
    -0.5 * z * z - std.ln() - 0.5 * (2.0 * PI).ln()
}

/// Points where the densities of N(m1, s1²) and N(m2, s2²) are equal.
pub fn normal_density_crossings(m1: f64, s1: f64, m2: f64, s2: f64) -> Vec<f64> {
    // log p1 - log p2 = a x² + b x + c
    let a = 0.5 / (s2 * s2) - 0.5 / (s1 * s1);
    let b = m1 / (s1 * s1) - m2 / (s2 * s2);
    let c = 0.5 * m2 * m2 / (s2 * s2) - 0.5 * m1 * m1 / (s1 * s1) + (s2 / s1).ln();
    let scale = 1.0 / (s1 * s1) + 1.0 / (s2 * s2);
    if a.abs() <= 1e-14 * scale {
        if b.abs() <= 1e-14 * scale {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // Numerically stable pair of roots.
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = if q == 0.0 {
        vec![0.0]
    } else {
        vec![q / a, c / q]
    };
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}
