//! All-to-all pair scoring with blocked upper-triangle traversal.
//!
//! The image range is cut into square blocks; block pairs `(bi, bj)` with
//! `bi <= bj` are scored in parallel on a pool of `workers` threads, each
//! worker folding into a private accumulator. Because the accumulator merge is
//! exact and order-free, results are bit-identical for any worker count or
//! block size. No score matrix is materialised.

mod accumulator;
mod exact_sum;
mod topk;

pub use accumulator::{
    read_summary_csv, ClassStats, ClassSummary, HistogramSpec, ScoreAccumulator, ScoredPair, SUMMARY_HEADER,
};
pub use exact_sum::ExactSum;
pub use topk::{top_k_pairs, RankedPair};

use rayon::prelude::*;

use crate::datamodel::{ClassId, Dataset};
use crate::error::{Error, Result};
use crate::head::HeadParams;
use crate::scalar::{dot, l2_distance};
use crate::scoring::{cosine_mapped, invert_one, ComparisonMetric, InversionMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreKind<'a> {
    Comparison(ComparisonMetric),
    /// Inverted head-space distance. `companion` is also evaluated for
    /// retained and twin pairs so both score families are reported together.
    Similarity {
        head: &'a HeadParams<f64>,
        inversion: InversionMode,
        companion: ComparisonMetric,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairFilter {
    MatedOnly,
    NonMatedOnly,
    All,
}

impl PairFilter {
    #[inline]
    fn admits(self, same_subject: bool) -> bool {
        match self {
            PairFilter::MatedOnly => same_subject,
            PairFilter::NonMatedOnly => !same_subject,
            PairFilter::All => true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MatchJob<'a> {
    pub dataset: &'a Dataset,
    pub score: ScoreKind<'a>,
    pub filter: PairFilter,
    pub block_size: usize,
    pub workers: usize,
    pub bins: usize,
}

impl<'a> MatchJob<'a> {
    pub fn new(dataset: &'a Dataset, score: ScoreKind<'a>, filter: PairFilter) -> Self {
        Self {
            dataset,
            score,
            filter,
            block_size: 64,
            workers: 1,
            bins: HistogramSpec::DEFAULT_BINS,
        }
    }

    pub fn with_blocking(mut self, block_size: usize, workers: usize) -> Self {
        self.block_size = block_size;
        self.workers = workers;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::Config("block size must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        if self.dataset.image_count() == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
    }

    /// Upper-triangle block pairs in ascending order.
    fn blocks(&self) -> Vec<(usize, usize)> {
        let nb = self.dataset.image_count().div_ceil(self.block_size);
        (0..nb).flat_map(|bi| (bi..nb).map(move |bj| (bi, bj))).collect()
    }

    /// Pairs of block `(bi, bj)` passing the filter, in row-major order.
    fn for_each_pair(&self, (bi, bj): (usize, usize), mut f: impl FnMut(usize, usize)) {
        let n = self.dataset.image_count();
        let bs = self.block_size;
        let rows = bi * bs..((bi + 1) * bs).min(n);
        for i in rows {
            let start = if bi == bj { i + 1 } else { bj * bs };
            let cols = start..((bj + 1) * bs).min(n);
            let si = self.dataset.subject_of(i);
            for j in cols {
                if self.filter.admits(si == self.dataset.subject_of(j)) {
                    f(i, j);
                }
            }
        }
    }
}

/// Per-image data the scorer needs, computed once per run.
pub(crate) struct Prepared<'a> {
    ds: &'a Dataset,
    kind: PreparedKind,
    companion: Option<ComparisonMetric>,
    sq_norms: Vec<f64>,
}

enum PreparedKind {
    Comparison(ComparisonMetric),
    Similarity {
        projected: Vec<f64>,
        d_out: usize,
        reference: f64,
    },
}

impl<'a> Prepared<'a> {
    pub(crate) fn new(job: &MatchJob<'a>, pool: &rayon::ThreadPool) -> Result<Self> {
        let ds = job.dataset;
        let sq_norms: Vec<f64> = (0..ds.image_count()).map(|i| dot(ds.vector(i), ds.vector(i))).collect();
        let uses_cosine = matches!(
            job.score,
            ScoreKind::Comparison(ComparisonMetric::CosineMapped)
                | ScoreKind::Similarity {
                    companion: ComparisonMetric::CosineMapped,
                    ..
                }
        );
        if uses_cosine {
            if let Some(i) = sq_norms.iter().position(|&n| n == 0.0) {
                return Err(Error::Validation(format!(
                    "image `{}` has a zero embedding; cosine scores are undefined",
                    ds.image_id(i)
                )));
            }
        }
        let (kind, companion) = match job.score {
            ScoreKind::Comparison(metric) => (PreparedKind::Comparison(metric), None),
            ScoreKind::Similarity {
                head,
                inversion,
                companion,
            } => {
                if head.d_in() != ds.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: head.d_in(),
                        found: ds.dim(),
                    });
                }
                let rows: Vec<Vec<f64>> = pool.install(|| {
                    (0..ds.image_count())
                        .into_par_iter()
                        .map(|i| head.forward(ds.vector(i)))
                        .collect::<Result<_>>()
                })?;
                let d_out = head.d_out();
                let projected: Vec<f64> = rows.into_iter().flatten().collect();
                let mut kind = PreparedKind::Similarity {
                    projected,
                    d_out,
                    reference: 0.0,
                };
                let reference = match inversion {
                    InversionMode::Calibrated(r) => {
                        if !r.is_finite() {
                            return Err(Error::Config("reference_max must be finite".into()));
                        }
                        r
                    }
                    InversionMode::BatchRelative => {
                        let probe = Prepared {
                            ds,
                            kind,
                            companion: None,
                            sq_norms: Vec::new(),
                        };
                        let max = pool.install(|| {
                            job.blocks()
                                .par_iter()
                                .map(|&blk| {
                                    let mut m = f64::NEG_INFINITY;
                                    job.for_each_pair(blk, |i, j| m = m.max(probe.raw(i, j)));
                                    m
                                })
                                .reduce(|| f64::NEG_INFINITY, f64::max)
                        });
                        kind = probe.kind;
                        if max.is_finite() {
                            max
                        } else {
                            0.0
                        }
                    }
                };
                if let PreparedKind::Similarity { reference: r, .. } = &mut kind {
                    *r = reference;
                }
                (kind, Some(companion))
            }
        };
        Ok(Self {
            ds,
            kind,
            companion,
            sq_norms,
        })
    }

    fn comparison(&self, metric: ComparisonMetric, i: usize, j: usize) -> f64 {
        let (u, v) = (self.ds.vector(i), self.ds.vector(j));
        match metric {
            ComparisonMetric::CosineMapped => cosine_mapped(dot(u, v), self.sq_norms[i], self.sq_norms[j]),
            ComparisonMetric::InverseL2 => 1.0 / (1.0 + l2_distance(u, v)),
        }
    }

    fn raw(&self, i: usize, j: usize) -> f64 {
        match &self.kind {
            PreparedKind::Similarity { projected, d_out, .. } => {
                let d = *d_out;
                l2_distance(&projected[i * d..(i + 1) * d], &projected[j * d..(j + 1) * d])
            }
            PreparedKind::Comparison(_) => f64::NAN,
        }
    }

    /// Primary score of the pair.
    #[inline]
    pub(crate) fn score(&self, i: usize, j: usize) -> f64 {
        match &self.kind {
            PreparedKind::Comparison(metric) => self.comparison(*metric, i, j),
            PreparedKind::Similarity { reference, .. } => invert_one(self.raw(i, j), *reference),
        }
    }

    pub(crate) fn histogram_spec(&self, bins: usize) -> Result<HistogramSpec> {
        match &self.kind {
            PreparedKind::Comparison(_) => HistogramSpec::new(0.0, 1.0, bins),
            PreparedKind::Similarity { reference, .. } => {
                let hi = if *reference > 0.0 { *reference } else { 1.0 };
                HistogramSpec::new(0.0, hi, bins)
            }
        }
    }

    pub fn reference_max(&self) -> Option<f64> {
        match &self.kind {
            PreparedKind::Similarity { reference, .. } => Some(*reference),
            PreparedKind::Comparison(_) => None,
        }
    }

    fn detail(&self, i: usize, j: usize, class: ClassId, score: f64) -> ScoredPair {
        let (comparison, raw_similarity, similarity) = match &self.kind {
            PreparedKind::Comparison(_) => (Some(score), None, None),
            PreparedKind::Similarity { .. } => (
                self.companion.map(|m| self.comparison(m, i, j)),
                Some(self.raw(i, j)),
                Some(score),
            ),
        };
        ScoredPair {
            a: i,
            b: j,
            pair_class: self.ds.relations().pair_class(class),
            score,
            comparison,
            raw_similarity,
            similarity,
        }
    }
}

/// Worker-local accumulator indexed by [`ClassId`].
struct LocalAcc {
    stats: Vec<Option<ClassStats>>,
    retained: Vec<ScoredPair>,
    twin_pairs: Vec<ScoredPair>,
    unrelated_max: Vec<f64>,
}

impl LocalAcc {
    fn new(classes: usize, subjects: usize) -> Self {
        Self {
            stats: vec![None; classes],
            retained: Vec::new(),
            twin_pairs: Vec::new(),
            unrelated_max: vec![f64::NEG_INFINITY; subjects],
        }
    }

    fn merge(mut self, other: LocalAcc) -> LocalAcc {
        for (a, b) in self.stats.iter_mut().zip(other.stats) {
            match (a.as_mut(), b) {
                (Some(x), Some(y)) => x.merge(&y),
                (None, Some(y)) => *a = Some(y),
                _ => {}
            }
        }
        self.retained.extend(other.retained);
        self.twin_pairs.extend(other.twin_pairs);
        for (a, b) in self.unrelated_max.iter_mut().zip(other.unrelated_max) {
            *a = a.max(b);
        }
        self
    }
}

/// Score every pair admitted by the job's filter exactly once.
///
/// Pairs scoring at or above `retain_threshold` are kept with their details;
/// twin-class pairs are always kept in [`ScoreAccumulator::twin_pairs`].
pub fn run_match(job: &MatchJob<'_>, retain_threshold: Option<f64>) -> Result<ScoreAccumulator> {
    run_match_with_reference(job, retain_threshold).map(|(acc, _)| acc)
}

/// [`run_match`], also returning the inversion reference used for similarity scores.
pub fn run_match_with_reference(
    job: &MatchJob<'_>,
    retain_threshold: Option<f64>,
) -> Result<(ScoreAccumulator, Option<f64>)> {
    job.validate()?;
    let pool = job.pool()?;
    let prep = Prepared::new(job, &pool)?;
    let spec = prep.histogram_spec(job.bins)?;
    let ds = job.dataset;
    let rel = ds.relations();
    let (n_classes, n_subjects) = (rel.class_count(), ds.subject_count());

    let local = pool.install(|| {
        job.blocks()
            .par_iter()
            .fold(
                || LocalAcc::new(n_classes, n_subjects),
                |mut acc, &blk| {
                    job.for_each_pair(blk, |i, j| {
                        let (si, sj) = (ds.subject_of(i), ds.subject_of(j));
                        let class = rel.class_id(si, sj);
                        let x = prep.score(i, j);
                        acc.stats[class.index()]
                            .get_or_insert_with(|| ClassStats::new(spec.bins))
                            .push(x, spec.bin(x));
                        if class.is_unrelated() {
                            acc.unrelated_max[si] = acc.unrelated_max[si].max(x);
                            acc.unrelated_max[sj] = acc.unrelated_max[sj].max(x);
                        }
                        if class.is_twin() {
                            acc.twin_pairs.push(prep.detail(i, j, class, x));
                        }
                        if retain_threshold.is_some_and(|t| x >= t) {
                            acc.retained.push(prep.detail(i, j, class, x));
                        }
                    });
                    acc
                },
            )
            .reduce(|| LocalAcc::new(n_classes, n_subjects), LocalAcc::merge)
    });

    let mut out = ScoreAccumulator::new(spec, retain_threshold, n_subjects);
    for (k, stats) in local.stats.into_iter().enumerate() {
        if let Some(stats) = stats {
            out.classes.insert(rel.pair_class(ClassId(k as u32)), stats);
        }
    }
    out.retained = local.retained;
    out.retained.sort_by_key(|p| (p.a, p.b));
    out.twin_pairs = local.twin_pairs;
    out.twin_pairs.sort_by_key(|p| (p.a, p.b));
    out.unrelated_max = local.unrelated_max;
    Ok((out, prep.reference_max()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::PairClass;
    use crate::testutil::{dataset, grid};

    #[test]
    fn counts_follow_filter() {
        let ds = grid(3, 2);
        let metric = ScoreKind::Comparison(ComparisonMetric::InverseL2);
        let count = |f| run_match(&MatchJob::new(&ds, metric, f), None).unwrap().total_count();
        assert_eq!(count(PairFilter::MatedOnly), 3);
        assert_eq!(count(PairFilter::NonMatedOnly), 12);
        assert_eq!(count(PairFilter::All), 15);
    }

    #[test]
    fn retain_below_min_keeps_everything() {
        let ds = grid(4, 3);
        let job = MatchJob::new(
            &ds,
            ScoreKind::Comparison(ComparisonMetric::InverseL2),
            PairFilter::NonMatedOnly,
        );
        let acc = run_match(&job, Some(f64::NEG_INFINITY)).unwrap();
        assert_eq!(acc.retained.len() as u64, acc.total_count());
        let hist: u64 = acc.classes.values().flat_map(|c| &c.histogram).sum();
        assert_eq!(hist, acc.total_count());
    }

    #[test]
    fn twin_pairs_and_unrelated_max() {
        let ds = dataset(
            &[("a", &[&[1.0, 0.0]]), ("b", &[&[0.9, 0.1]]), ("c", &[&[0.0, 1.0]])],
            &[("a", "b")],
            &[],
        );
        let job = MatchJob::new(
            &ds,
            ScoreKind::Comparison(ComparisonMetric::CosineMapped),
            PairFilter::NonMatedOnly,
        );
        let acc = run_match(&job, None).unwrap();
        assert_eq!(acc.twin_pairs.len(), 1);
        assert_eq!(acc.twin_pairs[0].pair_class, PairClass::IdenticalTwin);
        assert!(acc.retained.is_empty());
        assert!(acc.unrelated_max.iter().all(|m| m.is_finite()));
        assert_eq!(acc.unrelated_max[0], 0.5);
    }

    #[test]
    fn zero_vector_rejected_for_cosine() {
        let ds = dataset(&[("a", &[&[0.0]]), ("b", &[&[1.0]])], &[], &[]);
        let job = MatchJob::new(
            &ds,
            ScoreKind::Comparison(ComparisonMetric::CosineMapped),
            PairFilter::All,
        );
        assert!(run_match(&job, None).is_err());
        let bad =
            MatchJob::new(&ds, ScoreKind::Comparison(ComparisonMetric::InverseL2), PairFilter::All).with_blocking(0, 1);
        assert!(matches!(run_match(&bad, None), Err(Error::Config(_))));
    }
}
