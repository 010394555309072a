//! Experiment configuration documents, presets and provenance hashing.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use credal_core::estimation::{LabelKind, Regime};
use credal_core::synthgen::BlockGrowth;
use credal_core::{Environment, Labeler, QuadratureConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GatingCurve,
    BoundsSweep,
    DiameterAblation,
    NoiseAblation,
    SampleComplexity,
    MechanismComplexity,
    MinimaxDemo,
    DroTrain,
    Certificate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::GatingCurve,
        ExperimentKind::BoundsSweep,
        ExperimentKind::DiameterAblation,
        ExperimentKind::NoiseAblation,
        ExperimentKind::SampleComplexity,
        ExperimentKind::MechanismComplexity,
        ExperimentKind::MinimaxDemo,
        ExperimentKind::DroTrain,
        ExperimentKind::Certificate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::GatingCurve => "gating_curve",
            ExperimentKind::BoundsSweep => "bounds_sweep",
            ExperimentKind::DiameterAblation => "diameter_ablation",
            ExperimentKind::NoiseAblation => "noise_ablation",
            ExperimentKind::SampleComplexity => "sample_complexity",
            ExperimentKind::MechanismComplexity => "mechanism_complexity",
            ExperimentKind::MinimaxDemo => "minimax_demo",
            ExperimentKind::DroTrain => "dro_train",
            ExperimentKind::Certificate => "certificate",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment {s:?}")))
    }
}

/// Scale of a preset configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Full experiment scale.
    Paper,
    /// Reduced scale that finishes in minutes on one core.
    Desk,
}

/// Evenly spaced values, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Linspace {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Linspace {
    pub fn new(start: f64, stop: f64, count: usize) -> Self {
        Linspace { start, stop, count }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    fn check(&self, what: &str) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) || self.count == 0 {
            return Err(HarnessError::Config(format!("{what}: need finite endpoints and count >= 1")));
        }
        Ok(())
    }
}

/// Gaussians with uniformly drawn mean and standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomGaussians {
    pub count: usize,
    pub mean_range: [f64; 2],
    pub std_range: [f64; 2],
}

impl RandomGaussians {
    fn check(&self, what: &str) -> Result<()> {
        let [m0, m1] = self.mean_range;
        let [s0, s1] = self.std_range;
        if !(m0 <= m1 && m0.is_finite() && m1.is_finite() && s0 > 0.0 && s0 <= s1 && s1.is_finite()) {
            return Err(HarnessError::Config(format!(
                "{what}: ranges must be ordered, finite, with positive std"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatingParams {
    pub slope: f64,
    /// Biases of the two sigmoid labelers.
    pub boundaries: [f64; 2],
    pub window_std: f64,
    /// Distance between the two window means; fixes the covariate TV.
    pub window_offset: f64,
    /// Centres of the sliding window.
    pub centres: Linspace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRegime {
    /// Sigmoid labelers.
    Soft,
    /// Threshold labelers.
    Hard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSweepParams {
    pub grid_means: Linspace,
    pub grid_std: f64,
    pub random_envs: RandomGaussians,
    /// Thresholds, or sigmoid biases in the soft regime.
    pub labeler_grid: Linspace,
    pub sigmoid_slope: f64,
    pub regimes: Vec<LabelRegime>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiameterAblationParams {
    pub random_envs: RandomGaussians,
    #[serde(default)]
    pub extra_environments: Vec<Environment>,
    /// Hard-label set; skipped when empty.
    pub thresholds: Vec<f64>,
    /// One soft-label set of probit labelers per sharpness.
    pub probit_kappas: Vec<f64>,
    pub probit_biases: Vec<f64>,
    pub n: usize,
    pub replications: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseAblationParams {
    pub eps_max: Vec<f64>,
    pub annotators: usize,
    pub environment: Environment,
    pub truth_threshold: f64,
    pub n: usize,
    pub replications: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleComplexityParams {
    pub environment: Environment,
    pub labelers: Vec<Labeler>,
    pub kind: LabelKind,
    pub n_values: Vec<usize>,
    pub replications: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismMethod {
    Interval,
    Block,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismComplexityParams {
    pub method: MechanismMethod,
    pub environment: Environment,
    /// Interval method only.
    pub pinned_mass: f64,
    /// Block method only.
    pub growth: BlockGrowth,
    pub n_y_values: Vec<usize>,
    pub n: usize,
    pub replications: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimaxDemoParams {
    pub etas: Vec<f64>,
    pub environment: Environment,
    pub theta_grid: Linspace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroTrainParams {
    pub environments: Vec<Environment>,
    pub labelers: Vec<Labeler>,
    /// Run greedy worst-world descent.
    pub greedy: bool,
    /// One log-sum-exp run per temperature.
    pub taus: Vec<f64>,
    pub steps: usize,
    pub step_size: f64,
    pub temperature: f64,
    /// Oracle and average-risk baseline grid.
    pub theta_grid: Linspace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateParams {
    pub annotations: PathBuf,
    /// Defaults to the conservative regime for hard labels and the exact
    /// regime for soft labels.
    #[serde(default)]
    pub regime: Option<Regime>,
    #[serde(default)]
    pub eps_star: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputNames {
    pub rows: String,
    pub summary: String,
}

impl Default for OutputNames {
    fn default() -> Self {
        OutputNames {
            rows: "rows.csv".into(),
            summary: "summary.json".into(),
        }
    }
}

fn default_delta() -> f64 {
    0.05
}

/// A complete experiment description. Exactly one parameter table, the one
/// named by `experiment`, is used; a `preset` supplies it when absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputNames,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gating_curve: Option<GatingParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds_sweep: Option<BoundsSweepParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter_ablation: Option<DiameterAblationParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_ablation: Option<NoiseAblationParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_complexity: Option<SampleComplexityParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanism_complexity: Option<MechanismComplexityParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimax_demo: Option<MinimaxDemoParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dro_train: Option<DroTrainParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateParams>,
}

fn std_normal() -> Environment {
    Environment::Gaussian { mean: 0.0, std: 1.0 }
}

fn pm1_thresholds() -> Vec<Labeler> {
    vec![Labeler::threshold(-1.0), Labeler::threshold(1.0)]
}

impl ExperimentConfig {
    /// A bare config for `experiment` with every table empty.
    pub fn empty(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            experiment,
            preset: None,
            seed: 0,
            delta: default_delta(),
            quadrature: QuadratureConfig::default(),
            output: OutputNames::default(),
            gating_curve: None,
            bounds_sweep: None,
            diameter_ablation: None,
            noise_ablation: None,
            sample_complexity: None,
            mechanism_complexity: None,
            minimax_demo: None,
            dro_train: None,
            certificate: None,
        }
    }

    /// Preset configuration. The certificate experiment has none: it reads
    /// user data.
    pub fn preset(experiment: ExperimentKind, preset: Preset) -> Result<Self> {
        let mut cfg = Self::empty(experiment);
        cfg.preset = Some(preset);
        cfg.fill_from_preset()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    fn has_table(&self, kind: ExperimentKind) -> bool {
        match kind {
            ExperimentKind::GatingCurve => self.gating_curve.is_some(),
            ExperimentKind::BoundsSweep => self.bounds_sweep.is_some(),
            ExperimentKind::DiameterAblation => self.diameter_ablation.is_some(),
            ExperimentKind::NoiseAblation => self.noise_ablation.is_some(),
            ExperimentKind::SampleComplexity => self.sample_complexity.is_some(),
            ExperimentKind::MechanismComplexity => self.mechanism_complexity.is_some(),
            ExperimentKind::MinimaxDemo => self.minimax_demo.is_some(),
            ExperimentKind::DroTrain => self.dro_train.is_some(),
            ExperimentKind::Certificate => self.certificate.is_some(),
        }
    }

    /// Supplies the experiment's table from `preset` when the document lacks it.
    pub fn fill_from_preset(&mut self) -> Result<()> {
        let Some(preset) = self.preset else {
            return Ok(());
        };
        if self.has_table(self.experiment) {
            return Ok(());
        }
        let paper = preset == Preset::Paper;
        match self.experiment {
            ExperimentKind::GatingCurve => {
                self.gating_curve = Some(GatingParams {
                    slope: 1.0,
                    boundaries: [-1.0, 1.0],
                    window_std: 1.0,
                    window_offset: 1.0,
                    centres: Linspace::new(-5.0, 5.0, if paper { 401 } else { 101 }),
                })
            }
            ExperimentKind::BoundsSweep => {
                self.bounds_sweep = Some(BoundsSweepParams {
                    grid_means: Linspace::new(-3.0, 3.0, if paper { 15 } else { 5 }),
                    grid_std: 1.0,
                    random_envs: RandomGaussians {
                        count: if paper { 5 } else { 1 },
                        mean_range: [-3.0, 3.0],
                        std_range: [0.5, 2.0],
                    },
                    labeler_grid: Linspace::new(-4.0, 4.0, if paper { 10 } else { 4 }),
                    sigmoid_slope: 1.0,
                    regimes: vec![LabelRegime::Soft, LabelRegime::Hard],
                })
            }
            ExperimentKind::DiameterAblation => {
                self.diameter_ablation = Some(DiameterAblationParams {
                    random_envs: RandomGaussians {
                        count: if paper { 500 } else { 40 },
                        mean_range: [-2.0, 2.0],
                        std_range: [0.5, 2.0],
                    },
                    extra_environments: Vec::new(),
                    thresholds: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
                    probit_kappas: vec![1.0, 2.0, 3.0],
                    probit_biases: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
                    n: 1000,
                    replications: if paper { 100 } else { 25 },
                })
            }
            ExperimentKind::NoiseAblation => {
                self.noise_ablation = Some(NoiseAblationParams {
                    eps_max: vec![0.1, 0.25, 0.5],
                    annotators: 5,
                    environment: std_normal(),
                    truth_threshold: 0.0,
                    n: 1000,
                    replications: if paper { 10_000 } else { 1000 },
                })
            }
            ExperimentKind::SampleComplexity => {
                self.delta = 0.005;
                self.sample_complexity = Some(SampleComplexityParams {
                    environment: std_normal(),
                    labelers: pm1_thresholds(),
                    kind: LabelKind::Hard,
                    n_values: vec![10, 30, 100, 500, 1000, 2000, 5000, 10_000, 20_000, 100_000],
                    replications: if paper { 2000 } else { 500 },
                })
            }
            ExperimentKind::MechanismComplexity => {
                self.delta = 0.05;
                self.mechanism_complexity = Some(MechanismComplexityParams {
                    method: MechanismMethod::Interval,
                    environment: Environment::Gaussian { mean: 2.0, std: 1.0 },
                    pinned_mass: 0.15,
                    growth: BlockGrowth::default(),
                    n_y_values: if paper {
                        vec![2, 5, 12, 20, 30, 50, 80, 100, 200, 500, 1000]
                    } else {
                        vec![2, 5, 12, 20, 50, 100]
                    },
                    n: 1000,
                    replications: if paper { 2000 } else { 500 },
                })
            }
            ExperimentKind::MinimaxDemo => {
                self.minimax_demo = Some(MinimaxDemoParams {
                    etas: vec![0.1, 0.5, 0.9],
                    environment: std_normal(),
                    theta_grid: Linspace::new(-6.0, 6.0, if paper { 10_000 } else { 1000 }),
                })
            }
            ExperimentKind::DroTrain => {
                self.dro_train = Some(DroTrainParams {
                    environments: vec![std_normal(), Environment::Gaussian { mean: 0.5, std: 1.2 }],
                    // Asymmetric panel, so the average-risk and worst-world optima differ.
                    labelers: vec![
                        Labeler::threshold(-1.0),
                        Labeler::threshold(0.3),
                        Labeler::threshold(0.6),
                        Labeler::sigmoid(2.0, 1.5),
                    ],
                    greedy: true,
                    taus: vec![0.01, 0.1, 1.0],
                    steps: if paper { 1000 } else { 300 },
                    step_size: 0.1,
                    temperature: 0.05,
                    theta_grid: Linspace::new(-4.0, 4.0, if paper { 8001 } else { 2001 }),
                })
            }
            ExperimentKind::Certificate => {
                return Err(HarnessError::Config(
                    "the certificate experiment has no preset; give a [certificate] table".into(),
                ))
            }
        }
        Ok(())
    }

    /// Schema checks run before any computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        self.quadrature
            .validate()
            .map_err(|e| HarnessError::Config(format!("quadrature: {e}")))?;
        for kind in ExperimentKind::ALL {
            if kind != self.experiment && self.has_table(kind) {
                return bad(format!("table [{kind}] given but experiment is {}", self.experiment));
            }
        }
        if !self.has_table(self.experiment) {
            return bad(format!(
                "missing [{}] table (or set preset = \"desk\" | \"paper\")",
                self.experiment
            ));
        }
        let positive = |v: usize, what: &str| {
            if v == 0 {
                Err(HarnessError::Config(format!("{what} must be at least 1")))
            } else {
                Ok(())
            }
        };
        let env_ok = |e: &Environment, what: &str| {
            e.validate().map_err(|err| HarnessError::Config(format!("{what}: {err}")))
        };
        let lab_ok = |l: &Labeler, what: &str| {
            l.validate().map_err(|err| HarnessError::Config(format!("{what}: {err}")))
        };
        match self.experiment {
            ExperimentKind::GatingCurve => {
                let p = self.gating_curve.as_ref().expect("checked");
                p.centres.check("gating_curve.centres")?;
                if !(p.window_std > 0.0 && p.slope.is_finite() && p.window_offset.is_finite()) {
                    return bad("gating_curve: window_std must be positive, slope and offset finite".into());
                }
            }
            ExperimentKind::BoundsSweep => {
                let p = self.bounds_sweep.as_ref().expect("checked");
                p.grid_means.check("bounds_sweep.grid_means")?;
                p.labeler_grid.check("bounds_sweep.labeler_grid")?;
                p.random_envs.check("bounds_sweep.random_envs")?;
                if !(p.grid_std > 0.0) || p.regimes.is_empty() {
                    return bad("bounds_sweep: grid_std must be positive and regimes non-empty".into());
                }
            }
            ExperimentKind::DiameterAblation => {
                let p = self.diameter_ablation.as_ref().expect("checked");
                p.random_envs.check("diameter_ablation.random_envs")?;
                positive(p.n, "diameter_ablation.n")?;
                positive(p.replications, "diameter_ablation.replications")?;
                positive(p.random_envs.count + p.extra_environments.len(), "diameter_ablation environment count")?;
                for e in &p.extra_environments {
                    env_ok(e, "diameter_ablation.extra_environments")?;
                }
                if p.thresholds.len() == 1 || (!p.probit_kappas.is_empty() && p.probit_biases.len() < 2) {
                    return bad("diameter_ablation: each labeler set needs at least two annotators".into());
                }
                if p.thresholds.is_empty() && p.probit_kappas.is_empty() {
                    return bad("diameter_ablation: no labeler sets".into());
                }
            }
            ExperimentKind::NoiseAblation => {
                let p = self.noise_ablation.as_ref().expect("checked");
                env_ok(&p.environment, "noise_ablation.environment")?;
                positive(p.n, "noise_ablation.n")?;
                positive(p.replications, "noise_ablation.replications")?;
                if p.annotators < 2 || p.eps_max.is_empty() || p.eps_max.iter().any(|e| !(0.0..=0.5).contains(e)) {
                    return bad("noise_ablation: need >= 2 annotators and eps_max values in [0, 0.5]".into());
                }
            }
            ExperimentKind::SampleComplexity => {
                let p = self.sample_complexity.as_ref().expect("checked");
                env_ok(&p.environment, "sample_complexity.environment")?;
                for l in &p.labelers {
                    lab_ok(l, "sample_complexity.labelers")?;
                }
                positive(p.replications, "sample_complexity.replications")?;
                if p.labelers.len() < 2 || p.n_values.is_empty() || p.n_values.contains(&0) {
                    return bad("sample_complexity: need >= 2 labelers and positive n values".into());
                }
            }
            ExperimentKind::MechanismComplexity => {
                let p = self.mechanism_complexity.as_ref().expect("checked");
                env_ok(&p.environment, "mechanism_complexity.environment")?;
                positive(p.n, "mechanism_complexity.n")?;
                positive(p.replications, "mechanism_complexity.replications")?;
                if p.n_y_values.is_empty() || p.n_y_values.iter().any(|&k| k < 2) {
                    return bad("mechanism_complexity: every n_y must be at least 2".into());
                }
            }
            ExperimentKind::MinimaxDemo => {
                let p = self.minimax_demo.as_ref().expect("checked");
                env_ok(&p.environment, "minimax_demo.environment")?;
                p.theta_grid.check("minimax_demo.theta_grid")?;
                if p.etas.is_empty() || p.etas.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
                    return bad("minimax_demo: etas must lie in (0, 1)".into());
                }
            }
            ExperimentKind::DroTrain => {
                let p = self.dro_train.as_ref().expect("checked");
                for e in &p.environments {
                    env_ok(e, "dro_train.environments")?;
                }
                for l in &p.labelers {
                    lab_ok(l, "dro_train.labelers")?;
                }
                p.theta_grid.check("dro_train.theta_grid")?;
                if p.environments.is_empty() || p.labelers.is_empty() {
                    return bad("dro_train: need at least one environment and one labeler".into());
                }
                if !p.greedy && p.taus.is_empty() {
                    return bad("dro_train: nothing to train (greedy = false and no taus)".into());
                }
                if p.taus.iter().any(|t| !(*t > 0.0)) || !(p.step_size > 0.0) || !(p.temperature > 0.0) {
                    return bad("dro_train: taus, step_size and temperature must be positive".into());
                }
            }
            ExperimentKind::Certificate => {
                let p = self.certificate.as_ref().expect("checked");
                if let Some(e) = p.eps_star {
                    if !(e >= 0.0) {
                        return bad("certificate.eps_star must be non-negative".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form: object keys sorted, no whitespace.
    pub fn hash(&self) -> Result<String> {
        let value = serde_json::to_value(self).map_err(|e| HarnessError::Config(e.to_string()))?;
        let canonical = serde_json::to_string(&value).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
    }
}

/// Certificate regime implied by a label kind when none is configured.
pub fn default_regime(kind: LabelKind) -> Regime {
    match kind {
        LabelKind::Hard => Regime::ConservativeStochasticHard,
        LabelKind::Soft => Regime::ExactSoft,
    }
}
