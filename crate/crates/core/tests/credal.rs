use approx::assert_abs_diff_eq;
use credal_core::measures::normal::std_normal_cdf as phi;
use credal_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn g(mean: f64, std: f64) -> Environment {
    Environment::gaussian(mean, std).unwrap()
}

fn pm1_spec(envs: Vec<Environment>) -> CredalSpec {
    CredalSpec::new(envs, vec![Labeler::threshold(-1.0), Labeler::threshold(1.0)]).unwrap()
}

#[test]
fn pairwise_worked_example() {
    let spec = pm1_spec(vec![g(0.0, 1.0), g(1.0, 1.0)]);
    let b = pairwise_bounds(&spec, (0, 0), (1, 1), &cfg(), true).unwrap();
    let c = 2.0 * phi(0.5) - 1.0;
    let a1 = phi(1.0) - phi(-1.0);
    let a2 = phi(0.0) - phi(-2.0);
    assert_abs_diff_eq!(b.cov_dist, c, epsilon = 1e-12);
    assert_abs_diff_eq!(b.exp_dis_i, a1, epsilon = 1e-12);
    assert_abs_diff_eq!(b.exp_dis_iprime, a2, epsilon = 1e-12);
    assert_abs_diff_eq!(b.lower, (a1 - c).abs().max((a2 - c).abs()), epsilon = 1e-12);
    assert_abs_diff_eq!(b.lower, 0.2998, epsilon = 1e-4);
    assert_abs_diff_eq!(b.upper, 0.8601, epsilon = 1e-4);
    let exact = b.exact.unwrap();
    assert!(b.lower <= exact && exact <= b.upper, "{exact}");
}

#[test]
fn pure_pairs_are_exact() {
    let spec = pm1_spec(vec![g(0.0, 1.0), g(1.0, 1.0)]);
    let same = pairwise_bounds(&spec, (1, 1), (1, 1), &cfg(), false).unwrap();
    assert_eq!((same.lower, same.upper, same.exact), (0.0, 0.0, Some(0.0)));
    let lab = pairwise_bounds(&spec, (0, 0), (0, 1), &cfg(), false).unwrap();
    assert_eq!(lab.lower, lab.upper);
    assert_abs_diff_eq!(lab.exact.unwrap(), phi(1.0) - phi(-1.0), epsilon = 1e-14);
    let cov = pairwise_bounds(&spec, (0, 1), (1, 1), &cfg(), false).unwrap();
    assert_abs_diff_eq!(cov.exact.unwrap(), 2.0 * phi(0.5) - 1.0, epsilon = 1e-14);
    assert!(matches!(
        pairwise_bounds(&spec, (2, 0), (0, 0), &cfg(), false),
        Err(CredalError::IndexOutOfRange(_))
    ));
}

#[test]
fn component_examples() {
    let c = cfg();
    let single = CredalSpec::new(vec![g(0.0, 1.0)], vec![Labeler::threshold(0.0)]).unwrap();
    let d = component_diameters(&single, &c, &SupDomain::default_for(&single, &c)).unwrap();
    assert_eq!((d.eta_x, d.eta_star, d.eta_bar), (0.0, 0.0, 0.0));

    let spec = pm1_spec(vec![g(0.0, 1.0)]);
    let d = component_diameters(&spec, &c, &SupDomain::default_for(&spec, &c)).unwrap();
    assert_eq!(d.eta_x, 0.0);
    assert_abs_diff_eq!(d.eta_star, 0.6827, epsilon = 1e-4);
    assert_eq!(d.eta_bar, 1.0);

    let cov = CredalSpec::new(vec![g(0.0, 1.0), g(1.0, 1.0)], vec![Labeler::threshold(0.0)]).unwrap();
    let d = component_diameters(&cov, &c, &SupDomain::default_for(&cov, &c)).unwrap();
    assert_abs_diff_eq!(d.eta_x, 0.3829, epsilon = 1e-4);
    assert_eq!((d.eta_star, d.eta_bar), (0.0, 0.0));
}

#[test]
fn diameter_examples() {
    let c = cfg();
    let spec = pm1_spec(vec![g(0.0, 1.0)]);
    let r = diameter_bounds(&spec, &c, &SupDomain::default_for(&spec, &c), true).unwrap();
    assert_abs_diff_eq!(r.exact.unwrap(), 0.6827, epsilon = 1e-4);
    assert_abs_diff_eq!(r.lower, r.upper, epsilon = 1e-15);
    assert_eq!(r.argmax_pair, Some(((0, 0), (0, 1))));

    let far = pm1_spec(vec![g(0.0, 1.0), g(40.0, 1.0)]);
    let r = diameter_bounds(&far, &c, &SupDomain::default_for(&far, &c), true).unwrap();
    assert!(r.eta_x > 1.0 - 1e-12);
    assert!(r.upper > 1.0 - 1e-12);
    assert!(r.exact.unwrap() <= r.upper + 2.0 * c.abs_tol);
}

#[test]
fn penalty_examples() {
    let c = cfg();
    let single = CredalSpec::new(vec![g(0.0, 1.0)], vec![Labeler::threshold(0.0)]).unwrap();
    let r = diameter_bounds(&single, &c, &SupDomain::default_for(&single, &c), false).unwrap();
    assert_eq!(robust_penalty(&r, 0.0).unwrap(), 0.0);

    let spec = pm1_spec(vec![g(0.0, 1.0)]);
    let r = diameter_bounds(&spec, &c, &SupDomain::default_for(&spec, &c), false).unwrap();
    assert_abs_diff_eq!(robust_penalty(&r, 0.05).unwrap(), 0.7327, epsilon = 1e-4);

    // Worked pairwise example, viewed as a report.
    let eta_x = 2.0 * phi(0.5) - 1.0;
    let star = phi(0.0) - phi(-2.0);
    let report = DiameterReport::from_components(ComponentDiameters {
        eta_x,
        eta_star: star,
        eta_bar: 1.0,
    });
    assert_abs_diff_eq!(report.eta_eff, star, epsilon = 1e-15);
    assert_abs_diff_eq!(robust_penalty(&report, 0.0).unwrap(), 0.8601, epsilon = 1e-4);
    assert!(robust_penalty(&report, -0.1).is_err());
}

/// A random discrete spec together with brute-force joint mass tables.
struct DiscreteCase {
    spec: CredalSpec,
    /// `joint[vertex][point * C + class]` over the shared grid.
    joint: Vec<Vec<f64>>,
}

fn random_simplex(rng: &mut ChaCha8Rng, c: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..c).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

fn random_discrete_case(rng: &mut ChaCha8Rng) -> DiscreteCase {
    let n_pts = rng.random_range(1..=16);
    let grid: Vec<f64> = (0..n_pts).map(|k| k as f64 * 0.5 - 3.0).collect();
    let c = rng.random_range(2..=3);
    let n_x = rng.random_range(1..=4);
    let n_y = rng.random_range(1..=4);
    let mut envs = Vec::new();
    let mut env_w = Vec::new();
    for _ in 0..n_x {
        // Random support subset so environments can be partly disjoint.
        let mut keep: Vec<usize> = (0..n_pts).filter(|_| rng.random_bool(0.7)).collect();
        if keep.is_empty() {
            keep.push(rng.random_range(0..n_pts));
        }
        let w = random_simplex(rng, keep.len());
        let mut full = vec![0.0; n_pts];
        for (k, &idx) in keep.iter().enumerate() {
            full[idx] = w[k];
        }
        envs.push(Environment::discrete(keep.iter().map(|&k| grid[k]).collect(), w).unwrap());
        env_w.push(full);
    }
    let mut labs = Vec::new();
    let mut lab_p = Vec::new();
    for _ in 0..n_y {
        if c == 2 && rng.random_bool(0.3) {
            let theta = rng.random_range(-3.5..5.0);
            lab_p.push(grid.iter().map(|&x| if x > theta { vec![0.0, 1.0] } else { vec![1.0, 0.0] }).collect::<Vec<_>>());
            labs.push(Labeler::threshold(theta));
        } else {
            let rows: Vec<Vec<f64>> = (0..n_pts).map(|_| random_simplex(rng, c)).collect();
            labs.push(Labeler::tabular(grid.clone(), rows.clone()).unwrap());
            lab_p.push(rows);
        }
    }
    let spec = CredalSpec::new(envs, labs).unwrap();
    let mut joint = Vec::new();
    for i in 0..n_x {
        for j in 0..n_y {
            let mut m = vec![0.0; n_pts * c];
            for x in 0..n_pts {
                for y in 0..c {
                    m[x * c + y] = env_w[i][x] * lab_p[j][x][y];
                }
            }
            joint.push(m);
        }
    }
    DiscreteCase { spec, joint }
}

fn half_l1(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[test]
fn bounds_cover_brute_force_on_random_discrete_specs() {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pair_checks = 0;
    for _ in 0..1000 {
        let case = random_discrete_case(&mut rng);
        let spec = &case.spec;
        let verts: Vec<Vertex> = spec.vertices().collect();
        let mut brute = 0.0_f64;
        for a in 0..verts.len() {
            for b in a + 1..verts.len() {
                let tv = half_l1(&case.joint[a], &case.joint[b]);
                brute = brute.max(tv);
                let pb = pairwise_bounds(spec, verts[a], verts[b], &c, true).unwrap();
                assert!(pb.lower - 1e-9 <= tv && tv <= pb.upper + 1e-9, "{pb:?} vs {tv}");
                assert_abs_diff_eq!(pb.exact.unwrap(), tv, epsilon = 1e-12);
                if verts[a].0 == verts[b].0 || verts[a].1 == verts[b].1 {
                    assert!((pb.upper - pb.lower).abs() <= 1e-9);
                }
                pair_checks += 1;
            }
        }
        let r = diameter_bounds(spec, &c, &SupDomain::default_for(spec, &c), true).unwrap();
        assert_abs_diff_eq!(r.exact.unwrap(), brute, epsilon = 1e-12);
        assert!(r.lower - 1e-9 <= brute && brute <= r.upper + 1e-9, "{r:?} vs {brute}");
        assert!(r.eta_x.max(r.eta_star) <= r.upper + 1e-15);
    }
    assert!(pair_checks > 1000);
}

#[test]
fn vertex_pairs_dominate_mixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checked = 0;
    while checked < 500 {
        let case = random_discrete_case(&mut rng);
        let v = case.joint.len();
        if v < 2 {
            continue;
        }
        let mut vmax = 0.0_f64;
        for a in 0..v {
            for b in a + 1..v {
                vmax = vmax.max(half_l1(&case.joint[a], &case.joint[b]));
            }
        }
        let mix = |rng: &mut ChaCha8Rng| {
            let pi = random_simplex(rng, v);
            let len = case.joint[0].len();
            (0..len).map(|k| (0..v).map(|a| pi[a] * case.joint[a][k]).sum::<f64>()).collect::<Vec<f64>>()
        };
        let (m1, m2) = (mix(&mut rng), mix(&mut rng));
        assert!(half_l1(&m1, &m2) <= vmax + 1e-12);
        checked += 1;
    }
}

#[test]
fn adding_a_labeler_never_shrinks_the_diameter() {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    for _ in 0..200 {
        let case = random_discrete_case(&mut rng);
        let spec = case.spec;
        let extra = loop {
            let other = random_discrete_case(&mut rng);
            if other.spec.class_count == spec.class_count {
                break other.spec.labelers[0].clone();
            }
        };
        // Tabular labelers drawn on another grid may not cover these points.
        let mut bigger = spec.clone();
        bigger.labelers.push(extra);
        let dom = SupDomain::default_for(&spec, &c);
        let (Ok(small), Ok(large)) = (
            diameter_bounds(&spec, &c, &dom, true),
            diameter_bounds(&bigger, &c, &dom, true),
        ) else {
            continue;
        };
        assert!(large.exact.unwrap() + 1e-12 >= small.exact.unwrap());
        assert!(large.upper + 1e-12 >= small.upper);
    }
}

#[test]
fn constant_disagreement_takes_the_bar_branch() {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let grid: Vec<f64> = (0..6).map(f64::from).collect();
        let envs: Vec<Environment> = (0..rng.random_range(2..4))
            .map(|_| Environment::discrete(grid.clone(), random_simplex(&mut rng, 6)).unwrap())
            .collect();
        let labs: Vec<Labeler> = (0..3)
            .map(|_| {
                let row = random_simplex(&mut rng, 2);
                Labeler::tabular(grid.clone(), vec![row; 6]).unwrap()
            })
            .collect();
        let spec = CredalSpec::new(envs, labs).unwrap();
        let r = diameter_bounds(&spec, &c, &SupDomain::default_for(&spec, &c), true).unwrap();
        assert_abs_diff_eq!(r.eta_star, r.eta_bar, epsilon = 1e-12);
        assert_abs_diff_eq!(r.eta_eff, (1.0 - r.eta_x) * r.eta_bar, epsilon = 1e-12);
        assert!(r.upper <= r.eta_x + r.eta_star + 1e-12);
        assert!(r.exact.unwrap() <= r.upper + 1e-12);
    }
}

#[test]
fn gaussian_sweep_pairs_respect_bounds() {
    let c = cfg();
    let envs = vec![g(-1.0, 1.0), g(0.5, 0.7), g(2.0, 1.5)];
    let labs = vec![
        Labeler::threshold(-0.5),
        Labeler::sigmoid(1.0, 0.5),
        Labeler::probit(2.0, -1.0),
        Labeler::noisy(Labeler::threshold(1.0), 0.2).unwrap(),
    ];
    let spec = CredalSpec::new(envs, labs).unwrap();
    let verts: Vec<Vertex> = spec.vertices().collect();
    for &a in &verts {
        for &b in &verts {
            let pb = pairwise_bounds(&spec, a, b, &c, true).unwrap();
            let e = pb.exact.unwrap();
            assert!(pb.lower - 2.0 * c.abs_tol <= e && e <= pb.upper + 2.0 * c.abs_tol, "{pb:?}");
        }
    }
    let r = diameter_bounds(&spec, &c, &SupDomain::default_for(&spec, &c), true).unwrap();
    let e = r.exact.unwrap();
    assert!(r.lower - 2.0 * c.abs_tol <= e && e <= r.upper + 2.0 * c.abs_tol, "{r:?}");
}
