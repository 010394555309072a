//! Plug-in estimates of the labeling diameter from multi-annotator samples,
//! concentration radii and certificates.

mod annotations;

use serde::{Deserialize, Serialize};
use std::fmt;

pub use annotations::{read_annotations, write_annotations, AnnotationSet};

use crate::error::{CredalError, Result};
use crate::measures::{check_simplex, half_l1, SIMPLEX_TOL};

/// One annotator's report on one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    Hard(usize),
    Soft(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Hard,
    Soft,
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelKind::Hard => "hard",
            LabelKind::Soft => "soft",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSample {
    pub x: f64,
    pub observations: Vec<Observation>,
}

impl AnnotatedSample {
    /// Kind shared by every observation, or an error when they are mixed.
    pub fn kind(&self) -> Result<LabelKind> {
        let mut kind = None;
        for o in &self.observations {
            let k = match o {
                Observation::Hard(_) => LabelKind::Hard,
                Observation::Soft(_) => LabelKind::Soft,
            };
            match kind {
                None => kind = Some(k),
                Some(prev) if prev != k => return Err(CredalError::MixedObservations),
                _ => {}
            }
        }
        kind.ok_or_else(|| CredalError::Empty("sample has no observations".into()))
    }
}

/// Pairwise disagreement between annotators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisagreementMatrix {
    pub n: usize,
    pub k: usize,
    pub values: Vec<Vec<f64>>,
    pub eta_hat: f64,
    pub argmax: (usize, usize),
    pub kind: LabelKind,
}

impl DisagreementMatrix {
    fn from_upper(n: usize, k: usize, upper: impl Fn(usize, usize) -> f64, kind: LabelKind) -> Self {
        let mut values = vec![vec![0.0; k]; k];
        let mut eta_hat = f64::NEG_INFINITY;
        let mut argmax = (0, 1);
        for j in 0..k {
            for jp in j + 1..k {
                let v = upper(j, jp).clamp(0.0, 1.0);
                values[j][jp] = v;
                values[jp][j] = v;
                // Strict comparison keeps the lexicographically first maximiser.
                if v > eta_hat {
                    eta_hat = v;
                    argmax = (j, jp);
                }
            }
        }
        DisagreementMatrix {
            n,
            k,
            values,
            eta_hat,
            argmax,
            kind,
        }
    }
}

fn uniform_shape(samples: &[AnnotatedSample], want: LabelKind) -> Result<usize> {
    let first = samples
        .first()
        .ok_or_else(|| CredalError::Empty("no annotated samples".into()))?;
    let k = first.observations.len();
    if k < 2 {
        return Err(CredalError::invalid(format!("need at least two annotators, got {k}")));
    }
    for s in samples {
        if s.observations.len() != k {
            return Err(CredalError::DimensionMismatch {
                left: k,
                right: s.observations.len(),
            });
        }
        if s.kind()? != want {
            return Err(CredalError::MixedObservations);
        }
    }
    Ok(k)
}

/// Fraction of samples on which each pair of annotators reports different labels.
pub fn empirical_disagreement_hard(samples: &[AnnotatedSample]) -> Result<DisagreementMatrix> {
    let k = uniform_shape(samples, LabelKind::Hard)?;
    let n = samples.len();
    let classes = samples
        .iter()
        .flat_map(|s| &s.observations)
        .map(|o| match o {
            Observation::Hard(c) => *c,
            Observation::Soft(_) => 0,
        })
        .max()
        .unwrap_or(0)
        + 1;

    if classes > 64 {
        return Ok(DisagreementMatrix::from_upper(
            n,
            k,
            |j, jp| {
                samples
                    .iter()
                    .filter(|s| s.observations[j] != s.observations[jp])
                    .count() as f64
                    / n as f64
            },
            LabelKind::Hard,
        ));
    }
    // One bitset over samples per (annotator, class); agreements are
    // popcounts of intersections.
    let words = n.div_ceil(64);
    let mut bits = vec![0u64; k * classes * words];
    for (t, s) in samples.iter().enumerate() {
        for (j, o) in s.observations.iter().enumerate() {
            if let Observation::Hard(c) = o {
                bits[(j * classes + c) * words + t / 64] |= 1u64 << (t % 64);
            }
        }
    }
    let set = |j: usize, c: usize| &bits[(j * classes + c) * words..(j * classes + c + 1) * words];
    let agree = |j: usize, jp: usize| -> u64 {
        (0..classes)
            .map(|c| {
                set(j, c)
                    .iter()
                    .zip(set(jp, c))
                    .map(|(a, b)| u64::from((a & b).count_ones()))
                    .sum::<u64>()
            })
            .sum()
    };
    Ok(DisagreementMatrix::from_upper(
        n,
        k,
        |j, jp| (n as u64 - agree(j, jp)) as f64 / n as f64,
        LabelKind::Hard,
    ))
}

/// Mean half-L1 distance between annotators' reported probability vectors.
pub fn empirical_disagreement_soft(samples: &[AnnotatedSample]) -> Result<DisagreementMatrix> {
    let k = uniform_shape(samples, LabelKind::Soft)?;
    let n = samples.len();
    let mut classes = None;
    let mut rows: Vec<&[f64]> = Vec::with_capacity(n * k);
    for s in samples {
        for o in &s.observations {
            if let Observation::Soft(p) = o {
                match classes {
                    None => classes = Some(p.len()),
                    Some(c) if c != p.len() => return Err(CredalError::ClassCountMismatch(c, p.len())),
                    _ => {}
                }
                check_simplex(p, SIMPLEX_TOL)?;
                rows.push(p);
            }
        }
    }
    let mut sums = vec![0.0; k * k];
    for t in 0..n {
        let r = &rows[t * k..(t + 1) * k];
        for j in 0..k {
            for jp in j + 1..k {
                sums[j * k + jp] += half_l1(r[j], r[jp]);
            }
        }
    }
    Ok(DisagreementMatrix::from_upper(
        n,
        k,
        |j, jp| sums[j * k + jp] / n as f64,
        LabelKind::Soft,
    ))
}

/// Diameter of a panel of binary symmetric-noise annotators on shared
/// ground truth, and the panel-free bound from the worst noise rate.
pub fn noisy_closed_form(epsilons: &[f64]) -> Result<(f64, f64)> {
    if epsilons.len() < 2 {
        return Err(CredalError::invalid("need at least two annotators"));
    }
    if let Some(e) = epsilons.iter().find(|e| !(0.0..=0.5).contains(*e)) {
        return Err(CredalError::invalid(format!("noise rate {e} outside [0, 0.5]")));
    }
    let mut eta = 0.0_f64;
    for (a, &ea) in epsilons.iter().enumerate() {
        for &eb in &epsilons[a + 1..] {
            eta = eta.max(ea + eb - 2.0 * ea * eb);
        }
    }
    let emax = epsilons.iter().copied().fold(0.0, f64::max);
    Ok((eta, 2.0 * emax - 2.0 * emax * emax))
}

fn check_conf(k: usize, delta: f64) -> Result<()> {
    if k < 2 {
        return Err(CredalError::invalid(format!("annotator count must be at least 2, got {k}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CredalError::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Union-bound Hoeffding radius over the `k(k−1)` ordered annotator pairs.
pub fn hoeffding_epsilon(n: usize, k: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(CredalError::invalid("sample count must be at least 1"));
    }
    check_conf(k, delta)?;
    let pairs = (k * (k - 1)) as f64;
    Ok(((pairs / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// Smallest `n` whose Hoeffding radius is at most `epsilon`.
pub fn required_samples(epsilon: f64, k: usize, delta: f64) -> Result<usize> {
    check_conf(k, delta)?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(CredalError::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if epsilon >= 1.0 {
        return Ok(1);
    }
    let pairs = (k * (k - 1)) as f64;
    let mut n = ((pairs / delta).ln() / (2.0 * epsilon * epsilon)).ceil().max(1.0) as usize;
    // Guard the ceiling against rounding in either direction.
    while n > 1 && hoeffding_epsilon(n - 1, k, delta)? <= epsilon {
        n -= 1;
    }
    while hoeffding_epsilon(n, k, delta)? > epsilon {
        n += 1;
    }
    Ok(n)
}

/// How a disagreement matrix relates to the true labeling diameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Deterministic annotators with hard labels: unbiased.
    ExactHardDeterministic,
    /// Annotators report their probability vectors: unbiased.
    ExactSoft,
    /// Hard labels sampled from stochastic annotators: an upper bound only.
    ConservativeStochasticHard,
    /// Hard labels from symmetric-noise annotators on shared ground truth.
    ClosedFormNoisy,
}

impl Regime {
    pub fn kind(self) -> LabelKind {
        match self {
            Regime::ExactSoft => LabelKind::Soft,
            _ => LabelKind::Hard,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::ExactHardDeterministic => "exact_hard_deterministic",
            Regime::ExactSoft => "exact_soft",
            Regime::ConservativeStochasticHard => "conservative_stochastic_hard",
            Regime::ClosedFormNoisy => "closed_form_noisy",
        }
    }

    /// `true` when the estimate upper-bounds the diameter rather than targeting it.
    pub fn is_conservative(self) -> bool {
        matches!(self, Regime::ConservativeStochasticHard)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Regime {
    type Err = CredalError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exact_hard_deterministic" => Regime::ExactHardDeterministic,
            "exact_soft" => Regime::ExactSoft,
            "conservative_stochastic_hard" => Regime::ConservativeStochasticHard,
            "closed_form_noisy" => Regime::ClosedFormNoisy,
            other => return Err(CredalError::invalid(format!("unknown regime {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub eta_hat: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
    pub k: usize,
    pub regime: Regime,
    /// `eta_hat + epsilon`.
    pub penalty_upper: f64,
    pub eps_star_input: Option<f64>,
}

impl Certificate {
    /// Penalty plus the statistical term, when one was supplied.
    pub fn total_bound(&self) -> f64 {
        self.penalty_upper + self.eps_star_input.unwrap_or(0.0)
    }
}

pub fn certificate(
    matrix: &DisagreementMatrix,
    delta: f64,
    regime: Regime,
    eps_star: Option<f64>,
) -> Result<Certificate> {
    if regime.kind() != matrix.kind {
        return Err(CredalError::RegimeMismatch {
            regime: regime.to_string(),
            kind: matrix.kind.to_string(),
        });
    }
    if let Some(e) = eps_star {
        if e.is_nan() || e < 0.0 {
            return Err(CredalError::invalid(format!("eps_star must be non-negative, got {e}")));
        }
    }
    let epsilon = hoeffding_epsilon(matrix.n, matrix.k, delta)?;
    Ok(Certificate {
        eta_hat: matrix.eta_hat,
        epsilon,
        delta,
        n: matrix.n,
        k: matrix.k,
        regime,
        penalty_upper: matrix.eta_hat + epsilon,
        eps_star_input: eps_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hard(x: f64, labels: &[usize]) -> AnnotatedSample {
        AnnotatedSample {
            x,
            observations: labels.iter().map(|&c| Observation::Hard(c)).collect(),
        }
    }

    #[test]
    fn bitset_counts_cross_word_boundaries() {
        let samples: Vec<_> = (0..130).map(|t| hard(0.0, &[t % 3, 0, usize::from(t % 2 == 0)])).collect();
        let m = empirical_disagreement_hard(&samples).unwrap();
        let brute = |a: usize, b: usize| {
            samples
                .iter()
                .filter(|s| s.observations[a] != s.observations[b])
                .count() as f64
                / 130.0
        };
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { 0.0 } else { brute(a, b) };
                assert_eq!(m.values[a][b], want);
            }
        }
    }

    #[test]
    fn ties_pick_the_first_pair() {
        let samples = vec![hard(0.0, &[0, 1, 0])];
        let m = empirical_disagreement_hard(&samples).unwrap();
        assert_eq!(m.argmax, (0, 1));
        assert_eq!(m.eta_hat, 1.0);
    }

    #[test]
    fn mixed_kinds_fail() {
        let s = AnnotatedSample {
            x: 0.0,
            observations: vec![Observation::Hard(0), Observation::Soft(vec![1.0, 0.0])],
        };
        assert_eq!(empirical_disagreement_hard(&[s]), Err(CredalError::MixedObservations));
    }

    #[test]
    fn missing_annotation_is_rejected() {
        let samples = vec![hard(0.0, &[0, 1]), hard(1.0, &[0])];
        assert!(matches!(
            empirical_disagreement_hard(&samples),
            Err(CredalError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn regime_round_trips_through_strings() {
        for r in [
            Regime::ExactHardDeterministic,
            Regime::ExactSoft,
            Regime::ConservativeStochasticHard,
            Regime::ClosedFormNoisy,
        ] {
            assert_eq!(r.as_str().parse::<Regime>().unwrap(), r);
        }
    }
}
