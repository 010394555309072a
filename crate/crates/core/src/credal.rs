//! Structured credal sets: the convex hull of every environment × labeler product.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CredalError, Result};
use crate::measures::{
    clamp_unit, expected_conditional_tv, joint_tv_exact, sup_conditional_tv, sup_conditional_tv_points, tv_env,
    Environment, Labeler, QuadratureConfig,
};

/// A vertex `(i, j)`: environment `i` paired with labeler `j`.
pub type Vertex = (usize, usize);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CredalSpec {
    pub environments: Vec<Environment>,
    pub labelers: Vec<Labeler>,
    pub class_count: usize,
}

impl CredalSpec {
    pub fn new(environments: Vec<Environment>, labelers: Vec<Labeler>) -> Result<Self> {
        let class_count = labelers
            .first()
            .map(Labeler::class_count)
            .ok_or_else(|| CredalError::Empty("credal set needs at least one labeler".into()))?;
        let spec = CredalSpec {
            environments,
            labelers,
            class_count,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.environments.is_empty() {
            return Err(CredalError::Empty("credal set needs at least one environment".into()));
        }
        if self.labelers.is_empty() {
            return Err(CredalError::Empty("credal set needs at least one labeler".into()));
        }
        if self.class_count < 2 {
            return Err(CredalError::invalid("class_count must be at least 2"));
        }
        for e in &self.environments {
            e.validate()?;
        }
        for l in &self.labelers {
            l.validate()?;
            if l.class_count() != self.class_count {
                return Err(CredalError::ClassCountMismatch(self.class_count, l.class_count()));
            }
        }
        Ok(())
    }

    pub fn n_x(&self) -> usize {
        self.environments.len()
    }

    pub fn n_y(&self) -> usize {
        self.labelers.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.n_x() * self.n_y()
    }

    /// Vertices in lexicographic order.
    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.n_x()).flat_map(move |i| (0..self.n_y()).map(move |j| (i, j)))
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v.0 >= self.n_x() || v.1 >= self.n_y() {
            return Err(CredalError::IndexOutOfRange(format!(
                "vertex ({}, {}) in a {}×{} credal set",
                v.0,
                v.1,
                self.n_x(),
                self.n_y()
            )));
        }
        Ok(())
    }

    fn all_discrete(&self) -> bool {
        self.environments.iter().all(Environment::is_discrete)
    }
}

/// Where the pointwise supremum of label disagreement is searched.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupDomain {
    Interval { lo: f64, hi: f64, grid_n: usize },
    Points(Vec<f64>),
}

impl SupDomain {
    pub const DEFAULT_GRID: usize = 2048;

    /// Union of the effective ranges of the Gaussian environments, or the
    /// support points when every environment is a discrete grid.
    pub fn default_for(spec: &CredalSpec, cfg: &QuadratureConfig) -> Self {
        if spec.all_discrete() {
            let mut pts: Vec<f64> = spec
                .environments
                .iter()
                .flat_map(|e| match e {
                    Environment::DiscreteGrid { points, .. } => points.clone(),
                    Environment::Gaussian { .. } => Vec::new(),
                })
                .collect();
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            return SupDomain::Points(pts);
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for e in &spec.environments {
            let (a, b) = e.effective_range(cfg.domain_halfwidth_sigmas);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        SupDomain::Interval {
            lo,
            hi,
            grid_n: Self::DEFAULT_GRID,
        }
    }

    fn sup(&self, l1: &Labeler, l2: &Labeler) -> Result<f64> {
        match self {
            SupDomain::Interval { lo, hi, grid_n } => sup_conditional_tv(l1, l2, *lo, *hi, *grid_n),
            SupDomain::Points(p) => sup_conditional_tv_points(l1, l2, p),
        }
    }
}

/// Distance bounds for one pair of vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseBounds {
    pub pair: (Vertex, Vertex),
    /// Covariate distance between the two environments.
    pub cov_dist: f64,
    /// Expected label disagreement under the first environment.
    pub exp_dis_i: f64,
    /// Expected label disagreement under the second environment.
    pub exp_dis_iprime: f64,
    pub lower: f64,
    pub upper: f64,
    pub exact: Option<f64>,
}

pub fn pairwise_bounds(
    spec: &CredalSpec,
    a: Vertex,
    b: Vertex,
    cfg: &QuadratureConfig,
    with_exact: bool,
) -> Result<PairwiseBounds> {
    spec.check_vertex(a)?;
    spec.check_vertex(b)?;
    let (i, j) = a;
    let (ip, jp) = b;
    let (ei, eip) = (&spec.environments[i], &spec.environments[ip]);
    let (lj, ljp) = (&spec.labelers[j], &spec.labelers[jp]);

    if i == ip {
        let d = expected_conditional_tv(ei, lj, ljp, cfg)?;
        return Ok(PairwiseBounds {
            pair: (a, b),
            cov_dist: 0.0,
            exp_dis_i: d,
            exp_dis_iprime: d,
            lower: d,
            upper: d,
            exact: Some(d),
        });
    }
    if j == jp {
        let c = tv_env(ei, eip, cfg)?;
        return Ok(PairwiseBounds {
            pair: (a, b),
            cov_dist: c,
            exp_dis_i: 0.0,
            exp_dis_iprime: 0.0,
            lower: c,
            upper: c,
            exact: Some(c),
        });
    }

    let c = tv_env(ei, eip, cfg)?;
    let ai = expected_conditional_tv(ei, lj, ljp, cfg)?;
    let aip = expected_conditional_tv(eip, lj, ljp, cfg)?;
    let lower = clamp_unit((ai - c).abs().max((aip - c).abs()));
    let upper = clamp_unit(c + ai.min(aip));
    let exact = if with_exact {
        Some(joint_tv_exact(ei, lj, eip, ljp, cfg)?)
    } else {
        None
    };
    Ok(PairwiseBounds {
        pair: (a, b),
        cov_dist: c,
        exp_dis_i: ai,
        exp_dis_iprime: aip,
        lower,
        upper,
        exact,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentDiameters {
    /// Largest covariate distance.
    pub eta_x: f64,
    /// Largest expected label disagreement under a single environment.
    pub eta_star: f64,
    /// Largest pointwise label disagreement.
    pub eta_bar: f64,
}

fn max_of(values: Result<Vec<f64>>) -> Result<f64> {
    Ok(values?.into_iter().fold(0.0, f64::max))
}

pub fn component_diameters(
    spec: &CredalSpec,
    cfg: &QuadratureConfig,
    sup_domain: &SupDomain,
) -> Result<ComponentDiameters> {
    spec.validate()?;
    let env_pairs: Vec<(usize, usize)> = (0..spec.n_x())
        .flat_map(|i| (i + 1..spec.n_x()).map(move |k| (i, k)))
        .collect();
    let lab_pairs: Vec<(usize, usize)> = (0..spec.n_y())
        .flat_map(|j| (j + 1..spec.n_y()).map(move |k| (j, k)))
        .collect();

    let eta_x = max_of(
        env_pairs
            .par_iter()
            .map(|&(i, k)| tv_env(&spec.environments[i], &spec.environments[k], cfg))
            .collect(),
    )?;
    let star_jobs: Vec<(usize, usize, usize)> = (0..spec.n_x())
        .flat_map(|i| lab_pairs.iter().map(move |&(j, k)| (i, j, k)))
        .collect();
    let eta_star = max_of(
        star_jobs
            .par_iter()
            .map(|&(i, j, k)| {
                expected_conditional_tv(&spec.environments[i], &spec.labelers[j], &spec.labelers[k], cfg)
            })
            .collect(),
    )?;
    let eta_bar = max_of(
        lab_pairs
            .par_iter()
            .map(|&(j, k)| sup_domain.sup(&spec.labelers[j], &spec.labelers[k]))
            .collect(),
    )?;
    Ok(ComponentDiameters { eta_x, eta_star, eta_bar })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterReport {
    pub eta_x: f64,
    pub eta_star: f64,
    pub eta_bar: f64,
    /// `min(eta_star, (1 − eta_x) · eta_bar)`.
    pub eta_eff: f64,
    pub lower: f64,
    pub upper: f64,
    pub exact: Option<f64>,
    pub argmax_pair: Option<(Vertex, Vertex)>,
}

impl DiameterReport {
    pub fn from_components(c: ComponentDiameters) -> Self {
        let eta_eff = c.eta_star.min((1.0 - c.eta_x) * c.eta_bar);
        DiameterReport {
            eta_x: c.eta_x,
            eta_star: c.eta_star,
            eta_bar: c.eta_bar,
            eta_eff,
            lower: clamp_unit(c.eta_x.max(c.eta_star)),
            upper: clamp_unit(c.eta_x + eta_eff),
            exact: None,
            argmax_pair: None,
        }
    }
}

/// Exact diameter as the largest joint distance over vertex pairs, with the
/// lexicographically first maximising pair.
pub fn exact_diameter(spec: &CredalSpec, cfg: &QuadratureConfig) -> Result<(f64, Option<(Vertex, Vertex)>)> {
    let verts: Vec<Vertex> = spec.vertices().collect();
    let pairs: Vec<(Vertex, Vertex)> = (0..verts.len())
        .flat_map(|a| (a + 1..verts.len()).map(move |b| (a, b)))
        .map(|(a, b)| (verts[a], verts[b]))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&((i, j), (k, l))| {
            joint_tv_exact(
                &spec.environments[i],
                &spec.labelers[j],
                &spec.environments[k],
                &spec.labelers[l],
                cfg,
            )
        })
        .collect::<Result<_>>()?;
    let mut best = 0.0;
    let mut arg = None;
    for (v, p) in values.into_iter().zip(pairs) {
        if arg.is_none() || v > best {
            best = v;
            arg = Some(p);
        }
    }
    Ok((best, arg))
}

pub fn diameter_bounds(
    spec: &CredalSpec,
    cfg: &QuadratureConfig,
    sup_domain: &SupDomain,
    with_exact: bool,
) -> Result<DiameterReport> {
    let mut report = DiameterReport::from_components(component_diameters(spec, cfg, sup_domain)?);
    if with_exact {
        let (d, arg) = exact_diameter(spec, cfg)?;
        report.exact = Some(d);
        report.argmax_pair = arg;
    }
    Ok(report)
}

/// Certified robustness penalty `eps_star + upper`. This is an upper
/// certificate, never the exact penalty.
pub fn robust_penalty(report: &DiameterReport, eps_star: f64) -> Result<f64> {
    if eps_star.is_nan() || eps_star < 0.0 {
        return Err(CredalError::invalid(format!("eps_star must be non-negative, got {eps_star}")));
    }
    if !report.upper.is_finite() {
        return Err(CredalError::invalid("diameter report is not finite"));
    }
    Ok(eps_star + report.upper)
}
