use approx::assert_abs_diff_eq;
use credal_core::measures::normal::{normal_density_crossings, std_normal_cdf};
use credal_core::measures::*;
use credal_core::CredalError;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn phi(x: f64) -> f64 {
    std_normal_cdf(x)
}

fn g(mean: f64, std: f64) -> Environment {
    Environment::gaussian(mean, std).unwrap()
}

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Exact joint TV between two Gaussian ⊗ threshold worlds. Between cut
/// points each class term is a fixed combination of the two densities, so
/// every cell contributes a difference of normal masses.
fn threshold_joint_oracle(m1: f64, s1: f64, t1: f64, m2: f64, s2: f64, t2: f64) -> f64 {
    let mut cuts = vec![f64::NEG_INFINITY, t1, t2, f64::INFINITY];
    cuts.extend(normal_density_crossings(m1, s1, m2, s2));
    cuts.sort_by(f64::total_cmp);
    let mass = |m: f64, s: f64, a: f64, b: f64| phi((b - m) / s) - phi((a - m) / s);
    let mut tv = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a >= b {
            continue;
        }
        let mid = if a.is_infinite() { b - 1.0 } else if b.is_infinite() { a + 1.0 } else { 0.5 * (a + b) };
        let (y1, y2) = (mid > t1, mid > t2);
        let p1 = mass(m1, s1, a, b);
        let p2 = mass(m2, s2, a, b);
        // Class 1 and class 0 contributions.
        for class in [true, false] {
            let c1 = if y1 == class { p1 } else { 0.0 };
            let c2 = if y2 == class { p2 } else { 0.0 };
            tv += (c1 - c2).abs();
        }
    }
    0.5 * tv
}

/// Exact TV between two Gaussians from their density crossings.
fn gaussian_tv_oracle(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    let mut cuts = vec![f64::NEG_INFINITY];
    cuts.extend(normal_density_crossings(m1, s1, m2, s2));
    cuts.push(f64::INFINITY);
    let mut tv = 0.0;
    for w in cuts.windows(2) {
        let p1 = phi((w[1] - m1) / s1) - phi((w[0] - m1) / s1);
        let p2 = phi((w[1] - m2) / s2) - phi((w[0] - m2) / s2);
        tv += (p1 - p2).abs();
    }
    0.5 * tv
}

#[test]
fn discrete_examples() {
    assert_eq!(tv_discrete(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
    assert_abs_diff_eq!(tv_discrete(&[0.7, 0.3], &[0.4, 0.6]).unwrap(), 0.3, epsilon = 1e-15);
    assert_eq!(tv_discrete(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
    assert!(matches!(
        tv_discrete(&[1.0], &[0.5, 0.5]),
        Err(CredalError::DimensionMismatch { .. })
    ));
    assert!(matches!(tv_discrete(&[0.7, 0.4], &[0.5, 0.5]), Err(CredalError::NotOnSimplex(_))));
}

#[test]
fn subset_enumeration_matches_half_l1_exactly() {
    // Dyadic masses keep every sum exact, so the comparison can be bitwise.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let c = rng.random_range(1..=12);
        let draw = |rng: &mut ChaCha8Rng| {
            let mut units: Vec<u32> = vec![0; c];
            for _ in 0..1024 {
                units[rng.random_range(0..c)] += 1;
            }
            units.into_iter().map(|u| f64::from(u) / 1024.0).collect::<Vec<f64>>()
        };
        let p = draw(&mut rng);
        let q = draw(&mut rng);
        let mut best = 0.0_f64;
        for mask in 0u32..(1 << c) {
            let (mut pa, mut qa) = (0.0, 0.0);
            for k in 0..c {
                if mask >> k & 1 == 1 {
                    pa += p[k];
                    qa += q[k];
                }
            }
            best = best.max((pa - qa).abs());
        }
        assert_eq!(tv_discrete(&p, &q).unwrap(), best);
    }
}

#[test]
fn env_examples() {
    assert_eq!(tv_env(&g(0.0, 1.0), &g(0.0, 1.0), &cfg()).unwrap(), 0.0);
    let v = tv_env(&g(0.0, 1.0), &g(1.0, 1.0), &cfg()).unwrap();
    assert_abs_diff_eq!(v, 2.0 * phi(0.5) - 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(v, 0.3829, epsilon = 1e-4);
    let a = Environment::discrete(vec![0.0, 1.0], vec![0.7, 0.3]).unwrap();
    let b = Environment::discrete(vec![0.0, 1.0], vec![0.4, 0.6]).unwrap();
    assert_abs_diff_eq!(tv_env(&a, &b, &cfg()).unwrap(), 0.3, epsilon = 1e-15);
}

#[test]
fn closed_form_agrees_with_quadrature() {
    let simpson = QuadratureConfig {
        method: QuadratureMethod::AdaptiveSimpson,
        ..cfg()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (m1, m2, s) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(0.5..2.0));
        let closed = tv_env(&g(m1, s), &g(m2, s), &cfg()).unwrap();
        // A hair of std difference forces the numerical path.
        let numeric = tv_env(&g(m1, s), &g(m2, s * (1.0 + 1e-9)), &simpson).unwrap();
        assert_abs_diff_eq!(closed, numeric, epsilon = 1e-6);
    }
}

#[test]
fn unequal_variances_match_crossing_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (m1, s1) = (rng.random_range(-3.0..3.0), rng.random_range(0.5..2.0));
        let (m2, s2) = (rng.random_range(-3.0..3.0), rng.random_range(0.5..2.0));
        let v = tv_env(&g(m1, s1), &g(m2, s2), &cfg()).unwrap();
        assert_abs_diff_eq!(v, gaussian_tv_oracle(m1, s1, m2, s2), epsilon = 2e-9);
    }
}

#[test]
fn conditional_examples() {
    let (a, b) = (Labeler::threshold(-1.0), Labeler::threshold(1.0));
    assert_eq!(conditional_tv(&a, &b, 0.0).unwrap(), 1.0);
    assert_eq!(conditional_tv(&a, &b, 2.0).unwrap(), 0.0);
    let v = conditional_tv(&Labeler::sigmoid(1.0, -1.0), &Labeler::sigmoid(1.0, 1.0), 0.0).unwrap();
    assert_abs_diff_eq!(v, sig(1.0) - sig(-1.0), epsilon = 1e-15);
    assert_abs_diff_eq!(v, 0.4621, epsilon = 1e-4);
    let three = Labeler::tabular(vec![0.0], vec![vec![0.2, 0.3, 0.5]]).unwrap();
    assert_eq!(conditional_tv(&three, &a, 0.0), Err(CredalError::ClassCountMismatch(3, 2)));
}

#[test]
fn expected_conditional_examples() {
    let (a, b) = (Labeler::threshold(-1.0), Labeler::threshold(1.0));
    let v = expected_conditional_tv(&g(0.0, 1.0), &a, &b, &cfg()).unwrap();
    assert_abs_diff_eq!(v, phi(1.0) - phi(-1.0), epsilon = 1e-14);
    assert_abs_diff_eq!(v, 0.6827, epsilon = 1e-4);
    let v = expected_conditional_tv(&g(2.0, 1.0), &a, &b, &cfg()).unwrap();
    assert_abs_diff_eq!(v, phi(-1.0) - phi(-3.0), epsilon = 1e-14);
    assert_abs_diff_eq!(v, 0.1573, epsilon = 1e-4);
    let v = expected_conditional_tv(&g(0.0, 2.0), &a, &b, &cfg()).unwrap();
    assert_abs_diff_eq!(v, 0.3829, epsilon = 1e-4);
    let z = Labeler::threshold(0.0);
    assert_eq!(expected_conditional_tv(&g(0.0, 1.0), &z, &z, &cfg()).unwrap(), 0.0);
}

#[test]
fn threshold_pairs_match_phi_under_random_gaussians() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let (m, s) = (rng.random_range(-3.0..3.0), rng.random_range(0.5..2.0));
        let (t1, t2) = (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
        let v = expected_conditional_tv(&g(m, s), &Labeler::threshold(t1), &Labeler::threshold(t2), &cfg()).unwrap();
        let exact = (phi((t2 - m) / s) - phi((t1 - m) / s)).abs();
        assert_abs_diff_eq!(v, exact, epsilon = 1e-12);
    }
}

#[test]
fn sigmoid_expectation_matches_brute_riemann_sum() {
    // Midpoint rule on a very fine grid as an independent check of the
    // smooth path, including labelers that cross.
    let cases = [
        (Labeler::sigmoid(1.0, -1.0), Labeler::sigmoid(1.0, 1.0)),
        (Labeler::sigmoid(3.0, 0.0), Labeler::sigmoid(0.5, 0.3)),
        (Labeler::probit(2.0, 0.5), Labeler::threshold(0.0)),
        (Labeler::noisy(Labeler::threshold(0.2), 0.1).unwrap(), Labeler::sigmoid(2.0, -0.5)),
    ];
    let (m, s) = (0.4, 1.3);
    for (l1, l2) in cases {
        // Segments split at the step points so the midpoint rule sees no jump.
        let mut edges = vec![m - 10.0 * s, m + 10.0 * s];
        edges.extend(l1.breakpoints());
        edges.extend(l2.breakpoints());
        edges.sort_by(f64::total_cmp);
        let mut acc = 0.0;
        for w in edges.windows(2) {
            let n = 200_000;
            let h = (w[1] - w[0]) / n as f64;
            for k in 0..n {
                let x = w[0] + (k as f64 + 0.5) * h;
                let dens = (-0.5 * ((x - m) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
                acc += conditional_tv(&l1, &l2, x).unwrap() * dens * h;
            }
        }
        let v = expected_conditional_tv(&g(m, s), &l1, &l2, &cfg()).unwrap();
        assert_abs_diff_eq!(v, acc, epsilon = 1e-7);
    }
}

#[test]
fn sup_examples() {
    let (a, b) = (Labeler::threshold(-1.0), Labeler::threshold(1.0));
    assert_eq!(sup_conditional_tv(&a, &b, -4.0, 4.0, 256).unwrap(), 1.0);
    let s = Labeler::sigmoid(1.0, 0.0);
    assert_eq!(sup_conditional_tv(&s, &s, -4.0, 4.0, 256).unwrap(), 0.0);
    let v = sup_conditional_tv(&Labeler::sigmoid(1.0, -1.0), &Labeler::sigmoid(1.0, 1.0), -6.0, 6.0, 1001).unwrap();
    assert_abs_diff_eq!(v, sig(1.0) - sig(-1.0), epsilon = 1e-10);
    // A disagreement region far thinner than the grid step is still found.
    let thin = sup_conditional_tv(&Labeler::threshold(0.0), &Labeler::threshold(1e-9), -4.0, 4.0, 256).unwrap();
    assert_eq!(thin, 1.0);
    assert!(sup_conditional_tv(&a, &b, 1.0, 1.0, 256).is_err());
    assert!(sup_conditional_tv(&a, &b, -1.0, 1.0, 100).is_err());
}

#[test]
fn joint_examples() {
    let (a, b) = (Labeler::threshold(-1.0), Labeler::threshold(1.0));
    let v = joint_tv_exact(&g(0.0, 1.0), &a, &g(0.0, 1.0), &b, &cfg()).unwrap();
    assert_abs_diff_eq!(v, 0.6827, epsilon = 1e-4);
    let z = Labeler::threshold(0.0);
    let v = joint_tv_exact(&g(0.0, 1.0), &z, &g(1.0, 1.0), &z, &cfg()).unwrap();
    assert_abs_diff_eq!(v, 0.3829, epsilon = 1e-4);
    assert_eq!(joint_tv_exact(&g(0.0, 1.0), &z, &g(0.0, 1.0), &z, &cfg()).unwrap(), 0.0);
}

#[test]
fn joint_matches_threshold_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let (m1, s1, t1) = (rng.random_range(-3.0..3.0), rng.random_range(0.5..2.0), rng.random_range(-3.0..3.0));
        let (m2, s2, t2) = (rng.random_range(-3.0..3.0), rng.random_range(0.5..2.0), rng.random_range(-3.0..3.0));
        let v = joint_tv_exact(&g(m1, s1), &Labeler::threshold(t1), &g(m2, s2), &Labeler::threshold(t2), &cfg())
            .unwrap();
        assert_abs_diff_eq!(v, threshold_joint_oracle(m1, s1, t1, m2, s2, t2), epsilon = 2e-9);
    }
}

fn random_env(rng: &mut ChaCha8Rng) -> Environment {
    g(rng.random_range(-3.0..3.0), rng.random_range(0.5..2.0))
}

fn random_labeler(rng: &mut ChaCha8Rng) -> Labeler {
    match rng.random_range(0..5) {
        0 => Labeler::threshold(rng.random_range(-3.0..3.0)),
        1 => {
            let a = rng.random_range(-3.0..2.0);
            Labeler::interval(a, a + rng.random_range(0.1..3.0)).unwrap()
        }
        2 => Labeler::sigmoid(rng.random_range(0.2..3.0), rng.random_range(-3.0..3.0)),
        3 => Labeler::probit(rng.random_range(0.2..3.0), rng.random_range(-3.0..3.0)),
        _ => Labeler::noisy(Labeler::threshold(rng.random_range(-3.0..3.0)), rng.random_range(0.0..0.5)).unwrap(),
    }
}

#[test]
fn fixed_covariate_joint_equals_expected_disagreement() {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..200 {
        let e = random_env(&mut rng);
        let (l1, l2) = (random_labeler(&mut rng), random_labeler(&mut rng));
        let joint = joint_tv_exact(&e, &l1, &e, &l2, &c).unwrap();
        let exp = expected_conditional_tv(&e, &l1, &l2, &c).unwrap();
        assert_abs_diff_eq!(joint, exp, epsilon = 2.0 * c.abs_tol);
    }
}

#[test]
fn fixed_labeler_joint_equals_covariate_distance() {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..200 {
        let (e1, e2) = (random_env(&mut rng), random_env(&mut rng));
        let l = random_labeler(&mut rng);
        let joint = joint_tv_exact(&e1, &l, &e2, &l, &c).unwrap();
        let cov = tv_env(&e1, &e2, &c).unwrap();
        assert_abs_diff_eq!(joint, cov, epsilon = 2.0 * c.abs_tol);
    }
}

#[test]
fn symmetry_and_triangle_on_random_triples() {
    let c = cfg();
    let tol = 2.0 * c.abs_tol;
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for _ in 0..60 {
        let es: Vec<Environment> = (0..3).map(|_| random_env(&mut rng)).collect();
        let ls: Vec<Labeler> = (0..3).map(|_| random_labeler(&mut rng)).collect();
        let d = |a: usize, b: usize| joint_tv_exact(&es[a], &ls[a], &es[b], &ls[b], &c).unwrap();
        assert_abs_diff_eq!(d(0, 1), d(1, 0), epsilon = tol);
        assert!(d(0, 2) <= d(0, 1) + d(1, 2) + tol);
        let e = |a: usize, b: usize| tv_env(&es[a], &es[b], &c).unwrap();
        assert_abs_diff_eq!(e(0, 1), e(1, 0), epsilon = tol);
        assert!(e(0, 2) <= e(0, 1) + e(1, 2) + tol);
        let x = |a: usize, b: usize| expected_conditional_tv(&es[0], &ls[a], &ls[b], &c).unwrap();
        assert_abs_diff_eq!(x(0, 1), x(1, 0), epsilon = tol);
        assert!(x(0, 2) <= x(0, 1) + x(1, 2) + tol);
    }
}

proptest! {
    #[test]
    fn discrete_tv_is_a_metric(raw in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..12)) {
        let norm = |v: Vec<f64>| {
            let s: f64 = v.iter().sum();
            if s == 0.0 { vec![1.0 / v.len() as f64; v.len()] } else { v.into_iter().map(|x| x / s).collect::<Vec<_>>() }
        };
        let p = norm(raw.iter().map(|t| t.0).collect());
        let q = norm(raw.iter().map(|t| t.1).collect());
        let r = norm(raw.iter().map(|t| t.2).collect());
        let d = |a: &[f64], b: &[f64]| tv_discrete(a, b).unwrap();
        prop_assert!((d(&p, &q) - d(&q, &p)).abs() <= 1e-15);
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-9);
        prop_assert_eq!(d(&p, &p), 0.0);
        prop_assert!((0.0..=1.0).contains(&d(&p, &q)));
    }

    #[test]
    fn threshold_disagreement_grows_with_separation(mid in -3.0f64..3.0, mean in -2.0f64..2.0, std in 0.5f64..2.0,
                                                    w1 in 0.0f64..3.0, extra in 0.0f64..3.0) {
        let e = g(mean, std);
        let at = |w: f64| expected_conditional_tv(&e, &Labeler::threshold(mid - w), &Labeler::threshold(mid + w), &cfg()).unwrap();
        prop_assert!(at(w1) <= at(w1 + extra) + 1e-15);
    }

    #[test]
    fn discrete_environment_monotonicity(
        pts in proptest::collection::btree_set(-50i32..50, 1..10),
        wraw in proptest::collection::vec(0.01f64..1.0, 10),
        mid in -5.0f64..5.0, w1 in 0.0f64..4.0, extra in 0.0f64..4.0,
    ) {
        let points: Vec<f64> = pts.iter().map(|p| f64::from(*p) / 5.0).collect();
        let w: Vec<f64> = wraw[..points.len()].to_vec();
        let s: f64 = w.iter().sum();
        let e = Environment::discrete(points, w.iter().map(|x| x / s).collect()).unwrap_or_else(|_| {
            let n = pts.len();
            Environment::discrete(pts.iter().map(|p| f64::from(*p) / 5.0).collect(), vec![1.0 / n as f64; n]).unwrap()
        });
        let at = |w: f64| expected_conditional_tv(&e, &Labeler::threshold(mid - w), &Labeler::threshold(mid + w), &cfg()).unwrap();
        prop_assert!(at(w1) <= at(w1 + extra) + 1e-12);
    }
}

#[test]
fn covariate_distance_runs_fast() {
    let start = std::time::Instant::now();
    let v = tv_env(&g(0.0, 1.0), &g(1.0, 1.0), &cfg()).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert!((v - 0.3829).abs() < 1e-3);
}

#[test]
fn quadrature_methods_agree() {
    let (l1, l2) = (Labeler::sigmoid(2.0, -0.3), Labeler::probit(1.0, 0.4));
    let e = g(0.3, 1.2);
    let base = joint_tv_exact(&e, &l1, &g(-0.5, 0.8), &l2, &cfg()).unwrap();
    for method in [QuadratureMethod::AdaptiveSimpson, QuadratureMethod::Grid] {
        let c = QuadratureConfig {
            method,
            node_count: 2048,
            ..cfg()
        };
        let v = joint_tv_exact(&e, &l1, &g(-0.5, 0.8), &l2, &c).unwrap();
        assert_abs_diff_eq!(v, base, epsilon = 1e-7);
    }
}
