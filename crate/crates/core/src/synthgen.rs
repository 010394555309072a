//! Seeded generators for synthetic annotated data and credal-set constructions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::credal::{CredalSpec, Vertex};
use crate::error::{CredalError, Result};
use crate::estimation::{AnnotatedSample, LabelKind, Observation};
use crate::measures::{check_simplex, Environment, Labeler, SIMPLEX_TOL};

/// A reproducible random stream: a master seed plus a substream index.
///
/// Each `(master, substream)` pair maps to its own ChaCha stream, so
/// replication `r` draws the same numbers however replications are
/// scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenSeed {
    pub master: u64,
    pub substream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl GenSeed {
    pub fn new(master: u64, substream: u64) -> Self {
        GenSeed { master, substream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.substream);
        rng
    }

    /// An independent seed for a nested stream, e.g. one sample size inside
    /// one replication.
    pub fn child(&self, index: u64) -> GenSeed {
        GenSeed {
            master: splitmix64(self.master ^ splitmix64(self.substream.wrapping_add(0x5851_f42d_4c95_7f2d))),
            substream: index,
        }
    }
}

/// Draws one covariate.
pub fn sample_env<R: Rng + ?Sized>(env: &Environment, rng: &mut R) -> f64 {
    match env {
        Environment::Gaussian { mean, std } => {
            let z: f64 = rng.sample(StandardNormal);
            mean + std * z
        }
        Environment::DiscreteGrid { points, weights } => {
            let u: f64 = rng.random();
            points[categorical(weights, u)]
        }
    }
}

/// Index of the first cumulative weight exceeding `u`.
fn categorical(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    // Rounding left the total just below 1; fall back to the last positive cell.
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1)
}

/// Draws a hard label from `labeler` at `x` using one uniform.
pub fn sample_label<R: Rng + ?Sized>(labeler: &Labeler, x: f64, rng: &mut R) -> Result<usize> {
    let p = labeler.probs(x)?;
    let u: f64 = rng.random();
    Ok(categorical(&p, u))
}

/// `n` i.i.d. covariates, each annotated independently by every labeler.
pub fn sample_annotated(
    env: &Environment,
    labelers: &[Labeler],
    n: usize,
    kind: LabelKind,
    seed: GenSeed,
) -> Result<Vec<AnnotatedSample>> {
    env.validate()?;
    if n == 0 {
        return Err(CredalError::invalid("sample size must be at least 1"));
    }
    if labelers.is_empty() {
        return Err(CredalError::Empty("no labelers".into()));
    }
    let c = labelers[0].class_count();
    for l in labelers {
        l.validate()?;
        if l.class_count() != c {
            return Err(CredalError::ClassCountMismatch(c, l.class_count()));
        }
        if kind == LabelKind::Soft && matches!(l, Labeler::SymmetricNoise { .. }) {
            return Err(CredalError::invalid(
                "noisy annotators only emit hard labels; no belief vector is observable",
            ));
        }
    }
    let mut rng = seed.rng();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let x = sample_env(env, &mut rng);
        let observations = labelers
            .iter()
            .map(|l| match kind {
                LabelKind::Hard => sample_label(l, x, &mut rng).map(Observation::Hard),
                LabelKind::Soft => l.probs(x).map(Observation::Soft),
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(AnnotatedSample { x, observations });
    }
    Ok(out)
}

/// `n` hard-labeled draws from a single world.
pub fn sample_world(env: &Environment, labeler: &Labeler, n: usize, seed: GenSeed) -> Result<Vec<(f64, usize)>> {
    if n == 0 {
        return Err(CredalError::invalid("sample size must be at least 1"));
    }
    let mut rng = seed.rng();
    (0..n)
        .map(|_| {
            let x = sample_env(env, &mut rng);
            sample_label(labeler, x, &mut rng).map(|y| (x, y))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureDraw {
    pub x: f64,
    pub y: usize,
    pub vertex: Vertex,
}

/// Samples from the mixture `Σ π_ij P_ij`; `pi` lists vertex weights in
/// lexicographic vertex order.
pub fn sample_mixture(spec: &CredalSpec, pi: &[f64], n: usize, seed: GenSeed) -> Result<Vec<MixtureDraw>> {
    spec.validate()?;
    if pi.len() != spec.vertex_count() {
        return Err(CredalError::DimensionMismatch {
            left: spec.vertex_count(),
            right: pi.len(),
        });
    }
    check_simplex(pi, SIMPLEX_TOL)?;
    if n == 0 {
        return Err(CredalError::invalid("sample size must be at least 1"));
    }
    let verts: Vec<Vertex> = spec.vertices().collect();
    let mut rng = seed.rng();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let (i, j) = verts[categorical(pi, u)];
        let x = sample_env(&spec.environments[i], &mut rng);
        let y = sample_label(&spec.labelers[j], x, &mut rng)?;
        out.push(MixtureDraw { x, y, vertex: (i, j) });
    }
    Ok(out)
}

/// Labelers built for a mechanism-complexity sweep, with the diameter they imply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismFamily {
    pub labelers: Vec<Labeler>,
    /// Largest pairwise expected disagreement under the generating environment.
    pub implied_eta_star: f64,
    /// Probability mass of each labeler's positive region.
    pub block_masses: Vec<f64>,
}

/// Cell layout for [`interval_mechanisms_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalLayout {
    /// Combined mass of the two pinned cells; this is the implied diameter.
    pub pinned_mass: f64,
    /// Background cell mass as a fraction of one pinned cell, capped so the
    /// cells fit in the unit interval.
    pub background_ratio: f64,
}

impl IntervalLayout {
    pub fn new(pinned_mass: f64) -> Self {
        IntervalLayout {
            pinned_mass,
            background_ratio: 0.5,
        }
    }
}

/// Indicator labelers on disjoint consecutive quantile cells.
///
/// Two pinned cells carry `pinned_mass / 2` each; every other cell carries
/// `min((1 − p) / (n_y − 2), r · p / 2)`. Disjoint indicators disagree on the
/// union of their cells, so the largest pairwise disagreement is the pinned
/// pair, `p`, for every `n_y`.
pub fn interval_mechanisms(n_y: usize, env: &Environment, pinned_mass: f64) -> Result<MechanismFamily> {
    interval_mechanisms_with(n_y, env, IntervalLayout::new(pinned_mass))
}

pub fn interval_mechanisms_with(n_y: usize, env: &Environment, layout: IntervalLayout) -> Result<MechanismFamily> {
    env.validate()?;
    let p = layout.pinned_mass;
    if !(p > 0.0 && p < 1.0) {
        return Err(CredalError::invalid(format!("pinned_mass must lie in (0, 1), got {p}")));
    }
    if n_y < 2 {
        return Err(CredalError::invalid(format!("need at least two mechanisms, got {n_y}")));
    }
    let r = layout.background_ratio;
    if !(r > 0.0 && r <= 1.0) {
        return Err(CredalError::invalid(format!("background_ratio must lie in (0, 1], got {r}")));
    }
    if env.quantile(0.5).is_none() {
        return Err(CredalError::IncompatibleSupport(
            "interval mechanisms need a continuous quantile function".into(),
        ));
    }
    let background = if n_y > 2 {
        ((1.0 - p) / (n_y - 2) as f64).min(r * p / 2.0)
    } else {
        0.0
    };
    let mut masses = vec![p / 2.0, p / 2.0];
    masses.extend(std::iter::repeat_n(background, n_y - 2));
    let mut labelers = Vec::with_capacity(n_y);
    let mut start = 0.0_f64;
    for m in &masses {
        let end = (start + m).min(1.0);
        let a = env.quantile(start).expect("checked above");
        let b = env.quantile(end).expect("checked above");
        if a >= b {
            return Err(CredalError::invalid(format!(
                "cell of mass {m} collapses numerically; pinned_mass {p} is infeasible for {n_y} mechanisms"
            )));
        }
        labelers.push(Labeler::Interval { a, b });
        start = end;
    }
    Ok(MechanismFamily {
        labelers,
        implied_eta_star: p,
        block_masses: masses,
    })
}

/// Width schedule for [`block_mechanisms`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockGrowth {
    /// Mass of the innermost block.
    pub base: f64,
    /// Extra mass of every other block.
    pub jump: f64,
    /// Growth of block `j` in `ln j`.
    pub log_slope: f64,
}

impl Default for BlockGrowth {
    fn default() -> Self {
        BlockGrowth {
            base: 0.02,
            jump: 0.24,
            log_slope: 0.03,
        }
    }
}

/// Nested central quantile blocks whose masses grow with the index.
///
/// Block 0 has mass `base`; block `j ≥ 1` has `base + jump + log_slope · ln j`.
/// Nested indicators disagree on the difference of their blocks, so the
/// implied diameter is `jump + log_slope · ln(n_y − 1)`, non-decreasing in `n_y`.
pub fn block_mechanisms(n_y: usize, env: &Environment, growth: BlockGrowth) -> Result<MechanismFamily> {
    env.validate()?;
    if n_y < 2 {
        return Err(CredalError::invalid(format!("need at least two mechanisms, got {n_y}")));
    }
    let BlockGrowth { base, jump, log_slope } = growth;
    if !(base > 0.0 && jump >= 0.0 && log_slope >= 0.0) {
        return Err(CredalError::invalid("block growth needs base > 0 and non-negative increments"));
    }
    if env.quantile(0.5).is_none() {
        return Err(CredalError::IncompatibleSupport(
            "block mechanisms need a continuous quantile function".into(),
        ));
    }
    let masses: Vec<f64> = (0..n_y)
        .map(|j| if j == 0 { base } else { base + jump + log_slope * (j as f64).ln() })
        .collect();
    if let Some(m) = masses.iter().find(|m| **m > 1.0) {
        return Err(CredalError::invalid(format!(
            "block mass {m} exceeds 1 for {n_y} mechanisms"
        )));
    }
    let labelers = masses
        .iter()
        .map(|m| {
            let a = env.quantile(0.5 - m / 2.0).expect("checked above");
            let b = env.quantile(0.5 + m / 2.0).expect("checked above");
            Labeler::Interval { a, b }
        })
        .collect();
    Ok(MechanismFamily {
        labelers,
        implied_eta_star: masses[n_y - 1] - masses[0],
        block_masses: masses,
    })
}

/// The two-labeler hard instance: `f₁ ≡ 0` and `f₂ = 1{x ∈ S}` with `S`
/// the upper tail of mass `eta`.
pub fn minimax_instance(eta: f64, env: &Environment) -> Result<CredalSpec> {
    env.validate()?;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(CredalError::invalid(format!("eta must lie in (0, 1), got {eta}")));
    }
    let cut = match env {
        Environment::Gaussian { .. } => env.quantile(1.0 - eta).expect("gaussian quantile"),
        Environment::DiscreteGrid { points, weights } => {
            // Largest point whose upper tail (strictly above it) has mass eta.
            let mut tail = 0.0;
            let mut found = None;
            for k in (1..points.len()).rev() {
                tail += weights[k];
                if (tail - eta).abs() <= 1e-12 {
                    found = Some(points[k - 1]);
                    break;
                }
                if tail > eta {
                    break;
                }
            }
            found.ok_or_else(|| {
                CredalError::invalid(format!("no upper tail of the grid has mass exactly {eta}"))
            })?
        }
    };
    CredalSpec::new(
        vec![env.clone()],
        vec![Labeler::threshold(f64::INFINITY), Labeler::threshold(cut)],
    )
}
