use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::exact_sum::ExactSum;
use crate::datamodel::{csv_result, Dataset, PairClass};
use crate::error::{Error, Result};
use crate::scoring::ScoreRow;

/// Uniform histogram bins over `[lo, hi]`; out-of-range values land in the edge bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl HistogramSpec {
    pub const DEFAULT_BINS: usize = 512;

    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::Config(format!(
                "bad histogram range [{lo}, {hi}] with {bins} bins"
            )));
        }
        Ok(Self { lo, hi, bins })
    }

    #[inline]
    pub fn bin(&self, x: f64) -> usize {
        let t = (x - self.lo) / (self.hi - self.lo) * self.bins as f64;
        if t <= 0.0 {
            0
        } else {
            (t as usize).min(self.bins - 1)
        }
    }

    pub fn edges(&self, k: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.bins as f64;
        let hi = if k + 1 == self.bins {
            self.hi
        } else {
            self.lo + w * (k + 1) as f64
        };
        (self.lo + w * k as f64, hi)
    }

    fn same(&self, other: &Self) -> bool {
        self.lo.to_bits() == other.lo.to_bits() && self.hi.to_bits() == other.hi.to_bits() && self.bins == other.bins
    }
}

/// Streaming moments and histogram for one pair class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub count: u64,
    pub sum: ExactSum,
    pub sum_sq: ExactSum,
    pub min: f64,
    pub max: f64,
    pub histogram: Vec<u64>,
}

impl ClassStats {
    pub fn new(bins: usize) -> Self {
        Self {
            count: 0,
            sum: ExactSum::new(),
            sum_sq: ExactSum::new(),
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            histogram: vec![0; bins],
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64, bin: usize) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        self.histogram[bin] += 1;
    }

    pub fn merge(&mut self, other: &ClassStats) {
        self.count += other.count;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum.value() / self.count as f64
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        let n = self.count as f64;
        let mean = self.mean();
        (self.sum_sq.value() / n - mean * mean).max(0.0).sqrt()
    }
}

/// A scored image pair. `a < b` are dataset image indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub a: usize,
    pub b: usize,
    pub pair_class: PairClass,
    /// The job's primary score.
    pub score: f64,
    pub comparison: Option<f64>,
    pub raw_similarity: Option<f64>,
    pub similarity: Option<f64>,
}

impl ScoredPair {
    pub fn to_row(&self, ds: &Dataset) -> ScoreRow {
        ScoreRow {
            image_a: ds.image_id(self.a).clone(),
            image_b: ds.image_id(self.b).clone(),
            pair_class: self.pair_class.clone(),
            comparison_score: self.comparison,
            raw_similarity: self.raw_similarity,
            similarity_score: self.similarity,
        }
    }
}

/// Mergeable result of a match run.
///
/// Sums are exact (see [`ExactSum`]); counts, extrema and histograms are
/// order-free, and pair lists are kept sorted by `(a, b)`. Merging is
/// therefore associative and commutative, bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreAccumulator {
    pub histogram: HistogramSpec,
    pub retain_threshold: Option<f64>,
    pub classes: BTreeMap<PairClass, ClassStats>,
    /// Pairs with `score >= retain_threshold`.
    pub retained: Vec<ScoredPair>,
    /// Every scored pair whose subjects are twins, whatever the threshold.
    pub twin_pairs: Vec<ScoredPair>,
    /// Per subject (dataset subject index): highest score against any
    /// unrelated subject, `-inf` when none was scored.
    pub unrelated_max: Vec<f64>,
}

impl ScoreAccumulator {
    pub fn new(histogram: HistogramSpec, retain_threshold: Option<f64>, subjects: usize) -> Self {
        Self {
            histogram,
            retain_threshold,
            classes: BTreeMap::new(),
            retained: Vec::new(),
            twin_pairs: Vec::new(),
            unrelated_max: vec![f64::NEG_INFINITY; subjects],
        }
    }

    pub fn total_count(&self) -> u64 {
        self.classes.values().map(|c| c.count).sum()
    }

    pub fn class(&self, class: &PairClass) -> Option<&ClassStats> {
        self.classes.get(class)
    }

    pub fn merge(mut self, other: &ScoreAccumulator) -> Result<Self> {
        if !self.histogram.same(&other.histogram) {
            return Err(Error::IncompatibleAccumulators("histogram bins differ".into()));
        }
        if self.retain_threshold.map(f64::to_bits) != other.retain_threshold.map(f64::to_bits) {
            return Err(Error::IncompatibleAccumulators("retain thresholds differ".into()));
        }
        if self.unrelated_max.len() != other.unrelated_max.len() {
            return Err(Error::IncompatibleAccumulators("subject counts differ".into()));
        }
        for (class, stats) in &other.classes {
            self.classes
                .entry(class.clone())
                .or_insert_with(|| ClassStats::new(self.histogram.bins))
                .merge(stats);
        }
        merge_sorted(&mut self.retained, &other.retained);
        merge_sorted(&mut self.twin_pairs, &other.twin_pairs);
        for (a, b) in self.unrelated_max.iter_mut().zip(&other.unrelated_max) {
            *a = a.max(*b);
        }
        Ok(self)
    }

    /// `bin_lo,bin_hi,pair_class,count`, every bin of every class present.
    pub fn write_histogram_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        csv_result(out.write_record(["bin_lo", "bin_hi", "pair_class", "count"]))?;
        for (class, stats) in &self.classes {
            let name = class.to_string();
            for (k, count) in stats.histogram.iter().enumerate() {
                let (lo, hi) = self.histogram.edges(k);
                csv_result(out.write_record([lo.to_string(), hi.to_string(), name.clone(), count.to_string()]))?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// `pair_class,count,mean,std,min,max` (population std).
    pub fn write_summary_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        csv_result(out.write_record(SUMMARY_HEADER))?;
        for (class, s) in &self.classes {
            csv_result(out.write_record([
                class.to_string(),
                s.count.to_string(),
                s.mean().to_string(),
                s.std().to_string(),
                s.min.to_string(),
                s.max.to_string(),
            ]))?;
        }
        out.flush()?;
        Ok(())
    }
}

fn merge_sorted(dst: &mut Vec<ScoredPair>, src: &[ScoredPair]) {
    if src.is_empty() {
        return;
    }
    dst.extend_from_slice(src);
    dst.sort_by_key(|p| (p.a, p.b));
}

pub const SUMMARY_HEADER: [&str; 6] = ["pair_class", "count", "mean", "std", "min", "max"];

/// One row of a summary CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSummary {
    pub pair_class: PairClass,
    pub count: u64,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn read_summary_csv(r: impl Read) -> Result<Vec<ClassSummary>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    if csv_result(rdr.headers())?.iter().ne(SUMMARY_HEADER) {
        return Err(Error::Parse {
            line: 1,
            reason: format!("summary header must be `{}`", SUMMARY_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = csv_result(rec)?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            rec.get(i).unwrap_or("").parse().map_err(|_| Error::Parse {
                line,
                reason: format!("column {} is not a number", SUMMARY_HEADER[i]),
            })
        };
        out.push(ClassSummary {
            pair_class: rec.get(0).unwrap_or("").parse().map_err(|e: Error| Error::Parse {
                line,
                reason: e.to_string(),
            })?,
            count: num(1)? as u64,
            mean: num(2)?,
            std: num(3)?,
            min: num(4)?,
            max: num(5)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acc(scores: &[(PairClass, f64)]) -> ScoreAccumulator {
        let spec = HistogramSpec::new(0.0, 1.0, 8).unwrap();
        let mut a = ScoreAccumulator::new(spec, Some(0.5), 2);
        for (i, (c, x)) in scores.iter().enumerate() {
            a.classes
                .entry(c.clone())
                .or_insert_with(|| ClassStats::new(8))
                .push(*x, spec.bin(*x));
            if *x >= 0.5 {
                a.retained.push(ScoredPair {
                    a: i,
                    b: i + 100,
                    pair_class: c.clone(),
                    score: *x,
                    comparison: Some(*x),
                    raw_similarity: None,
                    similarity: None,
                });
            }
        }
        a
    }

    #[test]
    fn bins_cover_edges() {
        let s = HistogramSpec::new(0.0, 1.0, 4).unwrap();
        assert_eq!(s.bin(-0.1), 0);
        assert_eq!(s.bin(0.0), 0);
        assert_eq!(s.bin(0.25), 1);
        assert_eq!(s.bin(1.0), 3);
        assert_eq!(s.bin(7.0), 3);
        assert_eq!(s.edges(3), (0.75, 1.0));
        assert!(HistogramSpec::new(1.0, 1.0, 4).is_err());
    }

    #[test]
    fn merge_identity_and_commutativity() {
        let x = acc(&[(PairClass::NoRelation, 0.2), (PairClass::IdenticalTwin, 0.7)]);
        let y = acc(&[(PairClass::NoRelation, 0.9), (PairClass::Unknown, 0.1)]);
        let empty = ScoreAccumulator::new(x.histogram, x.retain_threshold, 2);
        assert_eq!(x.clone().merge(&empty).unwrap(), x);
        assert_eq!(x.clone().merge(&y).unwrap(), y.clone().merge(&x).unwrap());
        let merged = x.merge(&y).unwrap();
        assert_eq!(merged.total_count(), 4);
        assert_eq!(merged.class(&PairClass::NoRelation).unwrap().max, 0.9);
    }

    #[test]
    fn incompatible_merge_rejected() {
        let x = acc(&[]);
        let mut y = acc(&[]);
        y.retain_threshold = Some(0.6);
        assert!(matches!(x.clone().merge(&y), Err(Error::IncompatibleAccumulators(_))));
        let mut z = acc(&[]);
        z.histogram.bins = 9;
        assert!(matches!(x.merge(&z), Err(Error::IncompatibleAccumulators(_))));
    }

    #[test]
    fn summary_round_trip() {
        let a = acc(&[
            (PairClass::NoRelation, 0.2),
            (PairClass::NoRelation, 0.4),
            (PairClass::Family("Mother".into()), 0.3),
        ]);
        let mut buf = Vec::new();
        a.write_summary_csv(&mut buf).unwrap();
        let rows = read_summary_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 2);
        let nr = rows.iter().find(|r| r.pair_class == PairClass::NoRelation).unwrap();
        assert_eq!(nr.count, 2);
        assert!((nr.mean - 0.3).abs() < 1e-15);
        assert!((nr.std - 0.1).abs() < 1e-12);
    }

    #[test]
    fn histogram_csv_has_all_bins() {
        let a = acc(&[(PairClass::NoRelation, 0.2)]);
        let mut buf = Vec::new();
        a.write_histogram_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 8);
        assert!(text.contains("0.125,0.25,no_relation,1"));
    }
}
