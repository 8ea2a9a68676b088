mod common;

use std::collections::BTreeMap;

use common::{naive_cosine_mapped, naive_nonmated, small_world};
use lookalike_core::analysis::{above_threshold_table, scored_items, twin_threshold, ScoreSource};
use lookalike_core::datamodel::{Dataset, PairClass};
use lookalike_core::engine::{run_match, MatchJob, PairFilter, ScoreKind};
use lookalike_core::scoring::ComparisonMetric;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

/// Mean with an exactly computed sum, rounded once, then divided once.
fn rational_mean(xs: &[f64]) -> f64 {
    let sum = xs
        .iter()
        .map(|&x| BigRational::from_float(x).unwrap())
        .fold(BigRational::from_integer(BigInt::from(0)), |a, b| a + b);
    sum.to_f64().unwrap() / xs.len() as f64
}

fn rescan(ds: &Dataset) -> Vec<(usize, usize, PairClass, f64)> {
    naive_nonmated(ds)
        .into_iter()
        .map(|(i, j, c)| (i, j, c, naive_cosine_mapped(ds.vector(i), ds.vector(j))))
        .collect()
}

#[test]
fn threshold_and_table_equal_rescan() {
    for seed in 0..4 {
        let ds = small_world(seed, 15, 20, 3, 12);
        let oracle = rescan(&ds);
        let job = MatchJob::new(
            &ds,
            ScoreKind::Comparison(ComparisonMetric::CosineMapped),
            PairFilter::NonMatedOnly,
        )
        .with_blocking(5, 3);

        let pre = run_match(&job, None).unwrap();
        let t = twin_threshold(&pre, ScoreSource::Comparison).unwrap();
        let twin_scores: Vec<f64> = oracle
            .iter()
            .filter(|s| s.2 == PairClass::IdenticalTwin)
            .map(|s| s.3)
            .collect();
        assert_eq!(t.n_pairs, twin_scores.len());
        assert_eq!(t.t, rational_mean(&twin_scores));
        let naive = twin_scores.iter().sum::<f64>() / twin_scores.len() as f64;
        assert!((t.t - naive).abs() <= 1e-12);

        let acc = run_match(&job, Some(t.t)).unwrap();
        let table = above_threshold_table(scored_items(&acc.retained), t.t, acc.total_count());
        let mut groups: BTreeMap<PairClass, Vec<f64>> = BTreeMap::new();
        for s in oracle.iter().filter(|s| s.3 >= t.t) {
            groups.entry(s.2.clone()).or_default().push(s.3);
        }
        let total: usize = groups.values().map(Vec::len).sum();
        assert_eq!(table.total.count as usize, total);
        assert_eq!(table.rows.iter().map(|r| r.count).sum::<u64>(), table.total.count);
        assert_eq!(table.total_pairs as usize, oracle.len());
        for row in &table.rows {
            let class = row.pair_class.clone().unwrap();
            match groups.get(&class) {
                None => assert_eq!(row.count, 0),
                Some(xs) => {
                    assert_eq!(row.count as usize, xs.len());
                    assert_eq!(row.mean, rational_mean(xs));
                    assert_eq!(row.min, xs.iter().copied().fold(f64::INFINITY, f64::min));
                    assert_eq!(row.max, xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                    assert_eq!(row.percent, xs.len() as f64 / oracle.len() as f64 * 100.0);
                }
            }
        }
        assert!(groups
            .keys()
            .all(|c| table.rows.iter().any(|r| r.pair_class.as_ref() == Some(c))));
    }
}

#[test]
fn synthetic_hundred_pair_threshold() {
    let ds = small_world(42, 100, 0, 1, 8);
    let job = MatchJob::new(
        &ds,
        ScoreKind::Comparison(ComparisonMetric::CosineMapped),
        PairFilter::NonMatedOnly,
    );
    let t = twin_threshold(&run_match(&job, None).unwrap(), ScoreSource::Comparison).unwrap();
    assert_eq!(t.n_pairs, 100);
    let scores: Vec<f64> = rescan(&ds)
        .into_iter()
        .filter(|s| s.2 == PairClass::IdenticalTwin)
        .map(|s| s.3)
        .collect();
    assert!((t.t - scores.iter().sum::<f64>() / 100.0).abs() <= 1e-12);
}

#[test]
fn no_twins_is_an_error() {
    let ds = small_world(1, 0, 6, 2, 4);
    let job = MatchJob::new(
        &ds,
        ScoreKind::Comparison(ComparisonMetric::CosineMapped),
        PairFilter::NonMatedOnly,
    );
    assert!(twin_threshold(&run_match(&job, None).unwrap(), ScoreSource::Comparison).is_err());
}
