mod common;

use std::time::Instant;

use common::small_world;
use lookalike_core::engine::{run_match, MatchJob, PairFilter, ScoreKind};
use lookalike_core::scoring::ComparisonMetric;

#[test]
#[ignore = "benchmark; run with --ignored --nocapture"]
fn all_to_all_throughput() {
    let ds = small_world(1, 500, 1000, 3, 128);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let job = MatchJob::new(
        &ds,
        ScoreKind::Comparison(ComparisonMetric::CosineMapped),
        PairFilter::NonMatedOnly,
    )
    .with_blocking(64, workers);
    let start = Instant::now();
    let acc = run_match(&job, None).unwrap();
    let secs = start.elapsed().as_secs_f64();
    println!(
        "{} images, {} pairs, {workers} workers: {secs:.2} s, {:.1} M pairs/s",
        ds.image_count(),
        acc.total_count(),
        acc.total_count() as f64 / secs / 1e6
    );
}
