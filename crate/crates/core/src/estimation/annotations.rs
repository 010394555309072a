//! Delimited-text annotation files.
//!
//! ```text
//! kind=hard,classes=2,annotators=3
//! 0.25,0,1,1
//! -1.5,0,0,0
//! ```
//!
//! Soft rows list `x` followed by each annotator's `classes` probabilities.
//! Floats are written in shortest round-trip form, so reading back a written
//! file reproduces every value bit for bit.

use std::io::{BufRead, Write};

use super::{AnnotatedSample, LabelKind, Observation};
use crate::error::{CredalError, Result};
use crate::measures::{check_simplex, SIMPLEX_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct AnnotationSet {
    pub kind: LabelKind,
    pub classes: usize,
    pub annotators: usize,
    pub samples: Vec<AnnotatedSample>,
}

impl AnnotationSet {
    pub fn new(classes: usize, samples: Vec<AnnotatedSample>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| CredalError::Empty("no annotated samples".into()))?;
        let set = AnnotationSet {
            kind: first.kind()?,
            classes,
            annotators: first.observations.len(),
            samples,
        };
        for (t, s) in set.samples.iter().enumerate() {
            set.check_sample(s).map_err(|e| CredalError::Parse {
                line: t + 2,
                msg: e.to_string(),
            })?;
        }
        Ok(set)
    }

    fn check_sample(&self, s: &AnnotatedSample) -> Result<()> {
        if !s.x.is_finite() {
            return Err(CredalError::invalid(format!("non-finite covariate {}", s.x)));
        }
        if s.observations.len() != self.annotators {
            return Err(CredalError::DimensionMismatch {
                left: self.annotators,
                right: s.observations.len(),
            });
        }
        if s.kind()? != self.kind {
            return Err(CredalError::MixedObservations);
        }
        for o in &s.observations {
            match o {
                Observation::Hard(c) if *c >= self.classes => {
                    return Err(CredalError::invalid(format!(
                        "label {c} out of range for {} classes",
                        self.classes
                    )));
                }
                Observation::Soft(p) => {
                    if p.len() != self.classes {
                        return Err(CredalError::ClassCountMismatch(self.classes, p.len()));
                    }
                    check_simplex(p, SIMPLEX_TOL)?;
                }
                _ => {}
            }
        }
        Ok(())
    }
}

pub fn write_annotations<W: Write>(mut w: W, set: &AnnotationSet) -> Result<()> {
    writeln!(
        w,
        "kind={},classes={},annotators={}",
        set.kind, set.classes, set.annotators
    )?;
    let mut line = String::new();
    for s in &set.samples {
        line.clear();
        line.push_str(&format!("{:?}", s.x));
        for o in &s.observations {
            match o {
                Observation::Hard(c) => line.push_str(&format!(",{c}")),
                Observation::Soft(p) => {
                    for v in p {
                        line.push_str(&format!(",{v:?}"));
                    }
                }
            }
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> CredalError {
    CredalError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line: &str) -> Result<(LabelKind, usize, usize)> {
    let (mut kind, mut classes, mut annotators) = (None, None, None);
    for field in line.split(',') {
        let (key, value) = field
            .trim()
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("header field {field:?} is not key=value")))?;
        let num = || {
            value
                .parse::<usize>()
                .map_err(|_| parse_err(1, format!("{key} must be a non-negative integer")))
        };
        match key {
            "kind" => {
                kind = Some(match value {
                    "hard" => LabelKind::Hard,
                    "soft" => LabelKind::Soft,
                    _ => return Err(parse_err(1, format!("unknown kind {value:?}"))),
                })
            }
            "classes" => classes = Some(num()?),
            "annotators" => annotators = Some(num()?),
            _ => return Err(parse_err(1, format!("unknown header key {key:?}"))),
        }
    }
    match (kind, classes, annotators) {
        (Some(k), Some(c), Some(a)) => {
            if c < 2 {
                return Err(parse_err(1, "classes must be at least 2"));
            }
            if a < 2 {
                return Err(parse_err(1, "annotators must be at least 2"));
            }
            Ok((k, c, a))
        }
        _ => Err(parse_err(1, "header must declare kind, classes and annotators")),
    }
}

pub fn read_annotations<R: BufRead>(r: R) -> Result<AnnotationSet> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "missing header"))??;
    let (kind, classes, annotators) = parse_header(header.trim())?;
    let width = 1 + match kind {
        LabelKind::Hard => annotators,
        LabelKind::Soft => annotators * classes,
    };
    let mut samples = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != width {
            return Err(parse_err(lineno, format!("expected {width} fields, found {}", cells.len())));
        }
        let float = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("bad number {s:?}")))
        };
        let x = float(cells[0])?;
        let observations = match kind {
            LabelKind::Hard => cells[1..]
                .iter()
                .map(|c| {
                    c.parse::<usize>()
                        .map(Observation::Hard)
                        .map_err(|_| parse_err(lineno, format!("bad class index {c:?}")))
                })
                .collect::<Result<Vec<_>>>()?,
            LabelKind::Soft => cells[1..]
                .chunks(classes)
                .map(|chunk| chunk.iter().map(|c| float(c)).collect::<Result<Vec<_>>>().map(Observation::Soft))
                .collect::<Result<Vec<_>>>()?,
        };
        samples.push(AnnotatedSample { x, observations });
    }
    if samples.is_empty() {
        return Err(CredalError::Empty("annotation file has no rows".into()));
    }
    let set = AnnotationSet {
        kind,
        classes,
        annotators,
        samples,
    };
    for (t, s) in set.samples.iter().enumerate() {
        set.check_sample(s).map_err(|e| parse_err(t + 2, e.to_string()))?;
    }
    Ok(set)
}
