//! Comparison scores (matcher stand-ins) and inverted-distance similarity scores.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::datamodel::{csv_result, ImageId, PairClass};
use crate::error::{Error, Result};
use crate::head::HeadParams;
use crate::scalar::{dot, l2_distance, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComparisonMetric {
    /// `(1 + cos(u, v)) / 2`.
    CosineMapped,
    /// `1 / (1 + |u - v|)`.
    InverseL2,
}

impl fmt::Display for ComparisonMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComparisonMetric::CosineMapped => "cosine_mapped",
            ComparisonMetric::InverseL2 => "inverse_l2",
        })
    }
}

impl FromStr for ComparisonMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine_mapped" => Ok(ComparisonMetric::CosineMapped),
            "inverse_l2" => Ok(ComparisonMetric::InverseL2),
            other => Err(Error::Config(format!("unknown comparison metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonScore<S> {
    pub value: S,
    pub metric: ComparisonMetric,
}

pub fn comparison_score<S: Scalar>(u: &[S], v: &[S], metric: ComparisonMetric) -> Result<ComparisonScore<S>> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let value = match metric {
        ComparisonMetric::CosineMapped => {
            let (uu, vv) = (dot(u, u), dot(v, v));
            if uu == S::zero() || vv == S::zero() {
                return Err(Error::ZeroVector);
            }
            cosine_mapped(dot(u, v), uu, vv)
        }
        ComparisonMetric::InverseL2 => S::one() / (S::one() + l2_distance(u, v)),
    };
    Ok(ComparisonScore { value, metric })
}

/// Cosine mapped into `[0, 1]` from a dot product and the two squared norms.
#[inline]
pub(crate) fn cosine_mapped<S: Scalar>(dot: S, uu: S, vv: S) -> S {
    let half = S::lit(0.5);
    let cos = (dot / (uu * vv).sqrt()).max(-S::one()).min(S::one());
    half + half * cos
}

/// `|head(x1) - head(x2)|`, the head-space distance before inversion.
pub fn raw_similarity<S: Scalar>(params: &HeadParams<S>, x1: &[S], x2: &[S]) -> Result<S> {
    let a = params.forward(x1)?;
    let b = params.forward(x2)?;
    Ok(l2_distance(&a, &b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityScore<S> {
    pub raw_distance: S,
    pub inverted: S,
}

/// Which reference an inverted similarity score was computed against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InversionMode {
    /// Subtract from the maximum raw distance of the scored set itself.
    BatchRelative,
    /// Subtract from a frozen reference maximum and clamp at zero.
    Calibrated(f64),
}

impl fmt::Display for InversionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InversionMode::BatchRelative => f.write_str("batch_relative"),
            InversionMode::Calibrated(r) => write!(f, "calibrated(reference_max={r})"),
        }
    }
}

/// Batch-relative inversion: `inverted[i] = max(raw) - raw[i]`.
pub fn invert_scores<S: Scalar>(raw: &[S]) -> Result<(Vec<S>, S)> {
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("scores must be finite".into()));
    }
    let reference = raw.iter().copied().fold(S::neg_infinity(), S::max);
    Ok((raw.iter().map(|&r| reference - r).collect(), reference))
}

/// Calibrated inversion against a frozen reference, clamped at zero.
pub fn invert_with_reference<S: Scalar>(raw: &[S], reference_max: S) -> Vec<S> {
    raw.iter().map(|&r| invert_one(r, reference_max)).collect()
}

#[inline]
pub(crate) fn invert_one<S: Scalar>(raw: S, reference_max: S) -> S {
    (reference_max - raw).max(S::zero())
}

/// One line of a score CSV. Absent scores are written as empty fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub image_a: ImageId,
    pub image_b: ImageId,
    pub pair_class: PairClass,
    pub comparison_score: Option<f64>,
    pub raw_similarity: Option<f64>,
    pub similarity_score: Option<f64>,
}

pub const SCORES_HEADER: [&str; 6] = [
    "image_a",
    "image_b",
    "pair_class",
    "comparison_score",
    "raw_similarity",
    "similarity_score",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_score_rows<'a>(rows: impl IntoIterator<Item = &'a ScoreRow>, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    csv_result(out.write_record(SCORES_HEADER))?;
    for r in rows {
        csv_result(out.write_record([
            r.image_a.as_str(),
            r.image_b.as_str(),
            &r.pair_class.to_string(),
            &opt(r.comparison_score),
            &opt(r.raw_similarity),
            &opt(r.similarity_score),
        ]))?;
    }
    out.flush()?;
    Ok(())
}

/// Read a score CSV; `#` lines are comments.
pub fn read_score_rows(r: impl Read) -> Result<Vec<ScoreRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    if csv_result(rdr.headers())?.iter().ne(SCORES_HEADER) {
        return Err(Error::Parse {
            line: 1,
            reason: format!("score header must be `{}`", SCORES_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = csv_result(rec)?;
        let line = rec.position().map_or(0, |p| p.line());
        let wrap = |e: Error| Error::Parse {
            line,
            reason: e.to_string(),
        };
        let num = |i: usize| -> Result<Option<f64>> {
            match rec.get(i).unwrap_or("") {
                "" => Ok(None),
                s => s.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                    line,
                    reason: format!("`{}` is not a number: `{s}`", SCORES_HEADER[i]),
                }),
            }
        };
        out.push(ScoreRow {
            image_a: ImageId::new(rec.get(0).unwrap_or("")).map_err(wrap)?,
            image_b: ImageId::new(rec.get(1).unwrap_or("")).map_err(wrap)?,
            pair_class: rec.get(2).unwrap_or("").parse().map_err(wrap)?,
            comparison_score: num(3)?,
            raw_similarity: num(4)?,
            similarity_score: num(5)?,
        });
    }
    Ok(out)
}
