use std::collections::BTreeMap;
use std::fmt;

use crate::datamodel::PairClass;
use crate::engine::{ExactSum, ScoreAccumulator, ScoredPair};
use crate::error::{Error, Result};

/// Which score family a threshold was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreSource {
    Comparison,
    Similarity,
}

impl fmt::Display for ScoreSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Comparison => "comparison_score",
            Self::Similarity => "similarity_score",
        })
    }
}

/// Retained pairs as `(class, score)` items for [`above_threshold_table`].
pub fn scored_items(pairs: &[ScoredPair]) -> impl Iterator<Item = (&PairClass, f64)> {
    pairs.iter().map(|p| (&p.pair_class, p.score))
}

/// Experimental twin threshold: mean score over identical-twin non-mated pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinThreshold {
    pub t: f64,
    pub source: ScoreSource,
    pub n_pairs: usize,
}

impl TwinThreshold {
    /// Mean of `scores`, correctly rounded.
    pub fn from_scores(scores: &[f64], source: ScoreSource) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::NoTwinPairs);
        }
        let sum: ExactSum = scores.iter().copied().collect();
        Ok(Self {
            t: sum.value() / scores.len() as f64,
            source,
            n_pairs: scores.len(),
        })
    }

    /// Threshold over the accumulator's identical-twin pairs. Mirror twins
    /// and fraternal twins do not contribute.
    pub fn from_accumulator(acc: &ScoreAccumulator, source: ScoreSource) -> Result<Self> {
        let scores: Vec<f64> = acc
            .twin_pairs
            .iter()
            .filter(|p| p.pair_class == PairClass::IdenticalTwin)
            .map(|p| p.score)
            .collect();
        Self::from_scores(&scores, source)
    }
}

pub fn twin_threshold(acc: &ScoreAccumulator, source: ScoreSource) -> Result<TwinThreshold> {
    TwinThreshold::from_accumulator(acc, source)
}

/// One row of the above-threshold table. Empty rows hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub pair_class: Option<PairClass>,
    pub count: u64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// `count / total_pairs * 100`.
    pub percent: f64,
}

/// Scores at or above `threshold`, broken down by relationship.
#[derive(Debug, Clone, PartialEq)]
pub struct AboveThresholdTable {
    pub threshold: f64,
    /// Number of unordered pairs scored in the run; the percent denominator.
    pub total_pairs: u64,
    pub rows: Vec<TableRow>,
    pub total: TableRow,
}

#[derive(Default)]
struct RowAcc {
    count: u64,
    sum: ExactSum,
    min: f64,
    max: f64,
}

impl RowAcc {
    fn push(&mut self, x: f64) {
        if self.count == 0 {
            self.min = x;
            self.max = x;
        } else {
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
        self.count += 1;
        self.sum.add(x);
    }

    fn row(&self, pair_class: Option<PairClass>, total_pairs: u64) -> TableRow {
        let pct = |n: u64| {
            if total_pairs == 0 {
                0.0
            } else {
                n as f64 / total_pairs as f64 * 100.0
            }
        };
        if self.count == 0 {
            return TableRow {
                pair_class,
                count: 0,
                mean: 0.0,
                min: 0.0,
                max: 0.0,
                percent: 0.0,
            };
        }
        TableRow {
            pair_class,
            count: self.count,
            mean: self.sum.value() / self.count as f64,
            min: self.min,
            max: self.max,
            percent: pct(self.count),
        }
    }
}

const STANDARD_ROWS: [PairClass; 5] = [
    PairClass::IdenticalTwin,
    PairClass::IdenticalMirrorTwin,
    PairClass::FraternalTwin,
    PairClass::NoRelation,
    PairClass::Unknown,
];

/// Partitions retained `(class, score)` pairs with `score >= threshold` by
/// pair class.
///
/// The five twin/unrelated classes always appear; other classes appear only
/// when present. Pairs below the threshold are ignored, so a list retained at
/// a lower cut may be passed.
pub fn above_threshold_table<'a>(
    retained: impl IntoIterator<Item = (&'a PairClass, f64)>,
    threshold: f64,
    total_pairs: u64,
) -> AboveThresholdTable {
    let mut by_class: BTreeMap<PairClass, RowAcc> =
        STANDARD_ROWS.iter().map(|c| (c.clone(), RowAcc::default())).collect();
    let mut total = RowAcc::default();
    for (class, score) in retained.into_iter().filter(|p| p.1 >= threshold) {
        by_class.entry(class.clone()).or_default().push(score);
        total.push(score);
    }
    AboveThresholdTable {
        threshold,
        total_pairs,
        rows: by_class
            .into_iter()
            .map(|(c, acc)| acc.row(Some(c), total_pairs))
            .collect(),
        total: total.row(None, total_pairs),
    }
}
