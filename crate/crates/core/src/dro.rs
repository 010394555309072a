//! Finite min-max learning over the vertices of a credal set.
//!
//! Worst-case risk over the hull is attained at a vertex, so robust training
//! only has to track one risk per world. Training descends either the worst
//! world's smoothed risk or a log-sum-exp aggregate of all of them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::credal::{CredalSpec, Vertex};
use crate::error::{CredalError, Result};
use crate::measures::quadrature::{gaussian_expectation, Shape};
use crate::measures::{Environment, Labeler, QuadratureConfig};
use crate::synthgen::{self, GenSeed};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hypothesis {
    /// Predicts class 1 iff `orientation · (x − theta) > 0`.
    ThresholdClassifier { theta: f64, orientation: i8 },
    /// Predicts class 1 iff `weight · x + bias > 0`.
    LinearLogistic { weight: f64, bias: f64 },
}

impl Hypothesis {
    pub fn threshold(theta: f64, orientation: i8) -> Result<Self> {
        let h = Hypothesis::ThresholdClassifier { theta, orientation };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Hypothesis::ThresholdClassifier { theta, orientation } => {
                if !theta.is_finite() {
                    return Err(CredalError::invalid("threshold must be finite"));
                }
                if *orientation != 1 && *orientation != -1 {
                    return Err(CredalError::invalid(format!("orientation must be ±1, got {orientation}")));
                }
            }
            Hypothesis::LinearLogistic { weight, bias } => {
                if !weight.is_finite() || !bias.is_finite() {
                    return Err(CredalError::invalid("linear parameters must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn score(&self, x: f64) -> f64 {
        match self {
            Hypothesis::ThresholdClassifier { theta, orientation } => f64::from(*orientation) * (x - theta),
            Hypothesis::LinearLogistic { weight, bias } => weight * x + bias,
        }
    }

    pub fn predict(&self, x: f64) -> usize {
        usize::from(self.score(x) > 0.0)
    }

    /// Trainable parameters: `[theta]` or `[weight, bias]`.
    pub fn params(&self) -> Vec<f64> {
        match self {
            Hypothesis::ThresholdClassifier { theta, .. } => vec![*theta],
            Hypothesis::LinearLogistic { weight, bias } => vec![*weight, *bias],
        }
    }

    pub fn with_params(&self, p: &[f64]) -> Self {
        match self {
            Hypothesis::ThresholdClassifier { orientation, .. } => Hypothesis::ThresholdClassifier {
                theta: p[0],
                orientation: *orientation,
            },
            Hypothesis::LinearLogistic { .. } => Hypothesis::LinearLogistic {
                weight: p[0],
                bias: p[1],
            },
        }
    }

    /// Partial derivatives of the score with respect to the parameters.
    fn score_grad(&self, x: f64) -> [f64; 2] {
        match self {
            Hypothesis::ThresholdClassifier { orientation, .. } => [-f64::from(*orientation), 0.0],
            Hypothesis::LinearLogistic { .. } => [x, 1.0],
        }
    }

    /// Decision boundary and the score's slope in `x`, if the score is not constant.
    fn boundary(&self) -> Option<(f64, f64)> {
        match self {
            Hypothesis::ThresholdClassifier { theta, .. } => Some((*theta, 1.0)),
            Hypothesis::LinearLogistic { weight, bias } if *weight != 0.0 => Some((-bias / weight, weight.abs())),
            Hypothesis::LinearLogistic { .. } => None,
        }
    }
}

/// Per-world risks of one hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldRisk {
    pub risks: Vec<Vec<f64>>,
    pub worst_world: Vertex,
    pub worst_value: f64,
    pub lse_value: Option<f64>,
    pub weights: Option<Vec<Vec<f64>>>,
}

impl WorldRisk {
    pub fn from_risks(risks: Vec<Vec<f64>>) -> Self {
        let (worst_world, worst_value) = argmax(&risks);
        WorldRisk {
            risks,
            worst_world,
            worst_value,
            lse_value: None,
            weights: None,
        }
    }

    pub fn world_count(&self) -> usize {
        self.risks.iter().map(Vec::len).sum()
    }
}

/// Lexicographically first maximiser.
fn argmax(m: &[Vec<f64>]) -> (Vertex, f64) {
    let mut best = ((0, 0), f64::NEG_INFINITY);
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > best.1 {
                best = ((i, j), v);
            }
        }
    }
    best
}

fn require_binary(spec: &CredalSpec) -> Result<()> {
    spec.validate()?;
    if spec.class_count != 2 {
        return Err(CredalError::ClassCountMismatch(2, spec.class_count));
    }
    Ok(())
}

/// `E_env[g(x, P(Y = 1 | x))]` with `g` piecewise smooth between `cuts`.
fn world_expectation(
    env: &Environment,
    labeler: &Labeler,
    g: impl Fn(f64, f64) -> f64,
    cuts: &[f64],
    piecewise_constant: bool,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    match env {
        Environment::Gaussian { mean, std } => {
            if labeler.is_tabular() {
                return Err(CredalError::OffGrid(*mean));
            }
            let mut all = labeler.breakpoints();
            all.extend_from_slice(cuts);
            let shape = if piecewise_constant && labeler.is_piecewise_constant() {
                Shape::PiecewiseConstant
            } else {
                Shape::General
            };
            gaussian_expectation(
                *mean,
                *std,
                |x| g(x, labeler.probs(x).map_or(0.0, |p| p[1])),
                &all,
                shape,
                cfg,
            )
        }
        Environment::DiscreteGrid { points, weights } => {
            let mut acc = 0.0;
            for (x, w) in points.iter().zip(weights) {
                acc += w * g(*x, labeler.probs(*x)?[1]);
            }
            Ok(acc)
        }
    }
}

fn zero_one_risk(h: &Hypothesis, env: &Environment, labeler: &Labeler, cfg: &QuadratureConfig) -> Result<f64> {
    let cuts: Vec<f64> = h.boundary().map(|(b, _)| b).into_iter().collect();
    world_expectation(
        env,
        labeler,
        |x, q| if h.predict(x) == 1 { 1.0 - q } else { q },
        &cuts,
        true,
        cfg,
    )
}

/// Exact 0-1 risk of `h` in every world.
pub fn world_risks(h: &Hypothesis, spec: &CredalSpec, cfg: &QuadratureConfig) -> Result<WorldRisk> {
    require_binary(spec)?;
    h.validate()?;
    cfg.validate()?;
    let verts: Vec<Vertex> = spec.vertices().collect();
    let flat: Vec<f64> = verts
        .par_iter()
        .map(|&(i, j)| zero_one_risk(h, &spec.environments[i], &spec.labelers[j], cfg))
        .collect::<Result<_>>()?;
    Ok(WorldRisk::from_risks(flat.chunks(spec.n_y()).map(<[f64]>::to_vec).collect()))
}

/// Log-sum-exp of the risks at temperature `tau` and its softmax weights.
pub fn lse_objective(risks: &WorldRisk, tau: f64) -> Result<(f64, Vec<Vec<f64>>)> {
    lse_matrix(&risks.risks, tau)
}

fn lse_matrix(m: &[Vec<f64>], tau: f64) -> Result<(f64, Vec<Vec<f64>>)> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(CredalError::invalid(format!("tau must be positive, got {tau}")));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CredalError::invalid("risks must be finite"));
    }
    let (_, top) = argmax(m);
    let exps: Vec<Vec<f64>> = m
        .iter()
        .map(|row| row.iter().map(|v| ((v - top) / tau).exp()).collect())
        .collect();
    let total: f64 = exps.iter().flatten().sum();
    let value = top + tau * total.ln();
    let weights = exps
        .into_iter()
        .map(|row| row.into_iter().map(|e| e / total).collect())
        .collect();
    Ok((value, weights))
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Smoothed risk of one world and its parameter gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedRisk {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Risks where the hard decision is replaced by `σ(score / temperature)`.
fn smoothed_world(
    h: &Hypothesis,
    env: &Environment,
    labeler: &Labeler,
    temperature: f64,
    cfg: &QuadratureConfig,
) -> Result<SmoothedRisk> {
    let mut cuts = Vec::new();
    if let Some((b, slope)) = h.boundary() {
        let w = temperature / slope;
        for k in [-10.0, -4.0, -1.0, 0.0, 1.0, 4.0, 10.0] {
            cuts.push(b + k * w);
        }
    }
    let s = |x: f64| sigmoid(h.score(x) / temperature);
    let value = world_expectation(env, labeler, |x, q| q + s(x) * (1.0 - 2.0 * q), &cuts, false, cfg)?;
    let np = h.params().len();
    let mut grad = Vec::with_capacity(np);
    for p in 0..np {
        let gp = world_expectation(
            env,
            labeler,
            |x, q| {
                let sx = s(x);
                sx * (1.0 - sx) / temperature * h.score_grad(x)[p] * (1.0 - 2.0 * q)
            },
            &cuts,
            false,
            cfg,
        )?;
        grad.push(gp);
    }
    Ok(SmoothedRisk { value, grad })
}

/// Smoothed risks and gradients for every world.
pub fn smoothed_world_risks(
    h: &Hypothesis,
    spec: &CredalSpec,
    temperature: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<Vec<SmoothedRisk>>> {
    require_binary(spec)?;
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(CredalError::invalid("temperature must be positive"));
    }
    let verts: Vec<Vertex> = spec.vertices().collect();
    let flat: Vec<SmoothedRisk> = verts
        .par_iter()
        .map(|&(i, j)| smoothed_world(h, &spec.environments[i], &spec.labelers[j], temperature, cfg))
        .collect::<Result<_>>()?;
    Ok(flat.chunks(spec.n_y()).map(<[SmoothedRisk]>::to_vec).collect())
}

/// Value and gradient of the log-sum-exp of the smoothed risks. The gradient
/// is the softmax-weighted average of the per-world gradients.
pub fn lse_gradient(
    h: &Hypothesis,
    spec: &CredalSpec,
    tau: f64,
    temperature: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, Vec<f64>)> {
    let sm = smoothed_world_risks(h, spec, temperature, cfg)?;
    combine(&sm, Objective::Lse(tau))
}

#[derive(Clone, Copy, Debug)]
enum Objective {
    Worst,
    Lse(f64),
}

fn combine(sm: &[Vec<SmoothedRisk>], obj: Objective) -> Result<(f64, Vec<f64>)> {
    let values: Vec<Vec<f64>> = sm.iter().map(|r| r.iter().map(|s| s.value).collect()).collect();
    match obj {
        Objective::Worst => {
            let ((i, j), v) = argmax(&values);
            Ok((v, sm[i][j].grad.clone()))
        }
        Objective::Lse(tau) => {
            let (value, weights) = lse_matrix(&values, tau)?;
            let np = sm[0][0].grad.len();
            let mut grad = vec![0.0; np];
            for (row, wrow) in sm.iter().zip(&weights) {
                for (s, w) in row.iter().zip(wrow) {
                    for (g, d) in grad.iter_mut().zip(&s.grad) {
                        *g += w * d;
                    }
                }
            }
            Ok((value, grad))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    Greedy,
    Lse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Reported only; it has no useful gradient.
    ZeroOne,
    /// Sigmoid-smoothed 0-1 loss used for descent.
    Logistic,
}

/// Source of the per-world risks that drive training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskSource {
    Population,
    /// `n` samples per world, drawn once from the training seed.
    Sampled { n: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub tau: Option<f64>,
    pub step_size: f64,
    pub steps: usize,
    pub seed: u64,
    pub loss: LossKind,
    /// Width of the sigmoid that smooths the decision.
    pub temperature: f64,
    pub init: Option<Hypothesis>,
    pub risk_source: RiskSource,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: TrainMode::Greedy,
            tau: None,
            step_size: 0.1,
            steps: 300,
            seed: 0,
            loss: LossKind::Logistic,
            temperature: 0.05,
            init: None,
            risk_source: RiskSource::Population,
        }
    }
}

/// Consecutive objective increases tolerated before giving up.
pub const DIVERGENCE_PATIENCE: usize = 50;

/// Rises that stay within this margin of the best iterate are settling noise
/// between the smoothed and 0-1 optima, not divergence.
pub const DIVERGENCE_MARGIN: f64 = 1e-3;

impl TrainConfig {
    pub fn lse(tau: f64) -> Self {
        TrainConfig {
            mode: TrainMode::Lse,
            tau: Some(tau),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.mode, self.tau) {
            (TrainMode::Lse, Some(t)) if t > 0.0 && t.is_finite() => {}
            (TrainMode::Lse, _) => return Err(CredalError::invalid("lse mode needs a positive tau")),
            (TrainMode::Greedy, Some(_)) => return Err(CredalError::invalid("tau is only used in lse mode")),
            (TrainMode::Greedy, None) => {}
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(CredalError::invalid("step_size must be positive"));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(CredalError::invalid("temperature must be positive"));
        }
        if self.loss == LossKind::ZeroOne {
            return Err(CredalError::invalid("zero_one loss is evaluation-only; train with logistic"));
        }
        if let RiskSource::Sampled { n } = self.risk_source {
            if n == 0 {
                return Err(CredalError::invalid("sampled risks need n >= 1"));
            }
        }
        if let Some(h) = &self.init {
            h.validate()?;
        }
        Ok(())
    }

    fn objective(&self) -> Objective {
        match self.mode {
            TrainMode::Greedy => Objective::Worst,
            TrainMode::Lse => Objective::Lse(self.tau.unwrap_or(1.0)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Iterate with the smallest worst-world 0-1 risk.
    pub hypothesis: Hypothesis,
    /// 0-1 risks at every step, with the lse aggregate in lse mode.
    pub trace: Vec<WorldRisk>,
    pub surrogate_objective: f64,
}

/// Hard-labeled samples for one world.
type WorldSample = Vec<(f64, usize)>;

enum Evaluator<'a> {
    Population(&'a CredalSpec, &'a QuadratureConfig),
    Sampled { n_y: usize, worlds: Vec<WorldSample> },
}

impl Evaluator<'_> {
    fn zero_one(&self, h: &Hypothesis) -> Result<WorldRisk> {
        match self {
            Evaluator::Population(spec, cfg) => world_risks(h, spec, cfg),
            Evaluator::Sampled { n_y, worlds } => {
                let flat: Vec<f64> = worlds
                    .iter()
                    .map(|w| w.iter().filter(|(x, y)| h.predict(*x) != *y).count() as f64 / w.len() as f64)
                    .collect();
                Ok(WorldRisk::from_risks(flat.chunks(*n_y).map(<[f64]>::to_vec).collect()))
            }
        }
    }

    fn smoothed(&self, h: &Hypothesis, temperature: f64) -> Result<Vec<Vec<SmoothedRisk>>> {
        match self {
            Evaluator::Population(spec, cfg) => smoothed_world_risks(h, spec, temperature, cfg),
            Evaluator::Sampled { n_y, worlds } => {
                let np = h.params().len();
                let flat: Vec<SmoothedRisk> = worlds
                    .iter()
                    .map(|w| {
                        let mut value = 0.0;
                        let mut grad = vec![0.0; np];
                        for &(x, y) in w {
                            let s = sigmoid(h.score(x) / temperature);
                            let sign = if y == 1 { -1.0 } else { 1.0 };
                            value += if y == 1 { 1.0 - s } else { s };
                            let d = s * (1.0 - s) / temperature * sign;
                            for (g, ds) in grad.iter_mut().zip(h.score_grad(x)) {
                                *g += d * ds;
                            }
                        }
                        let n = w.len() as f64;
                        SmoothedRisk {
                            value: value / n,
                            grad: grad.into_iter().map(|g| g / n).collect(),
                        }
                    })
                    .collect();
                Ok(flat.chunks(*n_y).map(<[SmoothedRisk]>::to_vec).collect())
            }
        }
    }
}

fn default_init(spec: &CredalSpec, seed: u64) -> Hypothesis {
    let centre = spec
        .environments
        .iter()
        .map(|e| match e {
            Environment::Gaussian { mean, .. } => *mean,
            Environment::DiscreteGrid { points, weights } => points.iter().zip(weights).map(|(p, w)| p * w).sum(),
        })
        .sum::<f64>()
        / spec.n_x() as f64;
    let mut rng = GenSeed::new(seed, u64::MAX).rng();
    Hypothesis::ThresholdClassifier {
        theta: centre + rng.random_range(-1.0..1.0),
        orientation: 1,
    }
}

fn monitored_value(wr: &WorldRisk) -> f64 {
    wr.lse_value.unwrap_or(wr.worst_value)
}

/// Robust training by descent on the worst world or on the log-sum-exp aggregate.
pub fn train(spec: &CredalSpec, cfg: &TrainConfig, quad: &QuadratureConfig) -> Result<TrainOutcome> {
    require_binary(spec)?;
    cfg.validate()?;
    quad.validate()?;
    let eval = match cfg.risk_source {
        RiskSource::Population => Evaluator::Population(spec, quad),
        RiskSource::Sampled { n } => {
            let mut worlds = Vec::with_capacity(spec.vertex_count());
            for (w, (i, j)) in spec.vertices().enumerate() {
                let seed = GenSeed::new(cfg.seed, w as u64);
                worlds.push(synthgen::sample_world(&spec.environments[i], &spec.labelers[j], n, seed)?);
            }
            Evaluator::Sampled {
                n_y: spec.n_y(),
                worlds,
            }
        }
    };
    let objective = cfg.objective();
    let mut h = cfg.init.clone().unwrap_or_else(|| default_init(spec, cfg.seed));
    let mut step = cfg.step_size;
    let mut trace = Vec::with_capacity(cfg.steps + 1);
    let mut best: Option<(f64, Hypothesis)> = None;
    let mut increases = 0;
    let mut best_monitored = f64::INFINITY;

    let (mut obj, mut grad) = combine(&eval.smoothed(&h, cfg.temperature)?, objective)?;
    let mut surrogate_rose = false;
    for _ in 0..=cfg.steps {
        let mut wr = eval.zero_one(&h)?;
        if let Objective::Lse(tau) = objective {
            let (v, w) = lse_objective(&wr, tau)?;
            wr.lse_value = Some(v);
            wr.weights = Some(w);
        }
        if best.as_ref().is_none_or(|(b, _)| wr.worst_value < *b) {
            best = Some((wr.worst_value, h.clone()));
        }
        // Divergence is judged on the 0-1 version of the objective being
        // descended (the worst world, or its log-sum-exp aggregate), and only
        // while the smoothed objective itself is rising. A 0-1 value that
        // creeps up as descent settles on the smoothed optimum is bias.
        let monitored = monitored_value(&wr);
        trace.push(wr);
        best_monitored = best_monitored.min(monitored);
        if let Some(prev) = trace.len().checked_sub(2).map(|k| monitored_value(&trace[k])) {
            if surrogate_rose && monitored > prev && monitored > best_monitored + DIVERGENCE_MARGIN {
                increases += 1;
                if increases >= DIVERGENCE_PATIENCE {
                    return Err(CredalError::Diverged {
                        consecutive: increases,
                        trace,
                    });
                }
            } else {
                increases = 0;
            }
        }
        if trace.len() > cfg.steps || grad.iter().all(|g| g.abs() < 1e-14) || step < 1e-12 {
            break;
        }
        let params: Vec<f64> = h.params().iter().zip(&grad).map(|(p, g)| p - step * g).collect();
        let next = h.with_params(&params);
        let (next_obj, next_grad) = combine(&eval.smoothed(&next, cfg.temperature)?, objective)?;
        surrogate_rose = next_obj > obj;
        if surrogate_rose {
            step *= 0.5;
        }
        h = next;
        obj = next_obj;
        grad = next_grad;
    }
    let (_, hypothesis) = best.expect("at least one evaluated iterate");
    let (surrogate_objective, _) = combine(&eval.smoothed(&hypothesis, cfg.temperature)?, objective)?;
    Ok(TrainOutcome {
        hypothesis,
        trace,
        surrogate_objective,
    })
}

/// Exhaustive minimax over threshold classifiers on `theta_grid`, trying
/// orientation `+1` before `−1`. Ties keep the first candidate.
pub fn brute_force_minimax(
    spec: &CredalSpec,
    theta_grid: &[f64],
    quad: &QuadratureConfig,
) -> Result<(Hypothesis, f64)> {
    if theta_grid.is_empty() {
        return Err(CredalError::Empty("theta grid".into()));
    }
    let candidates: Vec<Hypothesis> = theta_grid
        .iter()
        .flat_map(|&theta| [1i8, -1].map(|orientation| Hypothesis::ThresholdClassifier { theta, orientation }))
        .collect();
    let worst: Vec<f64> = candidates
        .par_iter()
        .map(|h| world_risks(h, spec, quad).map(|w| w.worst_value))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, v) in worst.iter().enumerate() {
        if *v < worst[best] {
            best = k;
        }
    }
    Ok((candidates[best].clone(), worst[best]))
}
