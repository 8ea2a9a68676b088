use lookalike_core::analysis::{
    bland_altman, correlate, eer, fnmr_at_fmr, lookalike_sweep, mann_whitney_auc, roc, similarity_baseline,
    verification_metrics, Normalization,
};
use proptest::prelude::*;

fn enumerate_auc(g: &[f64], im: &[f64]) -> f64 {
    let mut s = 0.0;
    for &x in g {
        for &y in im {
            s += if x > y {
                1.0
            } else if x == y {
                0.5
            } else {
                0.0
            };
        }
    }
    s / (g.len() * im.len()) as f64
}

/// Scores drawn from a coarse grid so ties are common.
fn scores(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u32..40).prop_map(|k| k as f64 / 40.0), 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn auc_matches_enumeration(g in scores(60), im in scores(60)) {
        let want = enumerate_auc(&g, &im);
        prop_assert!((mann_whitney_auc(&g, &im).unwrap() - want).abs() <= 1e-9);
        let c = roc(&g, &im).unwrap();
        prop_assert!((c.auc_trapezoid() - want).abs() <= 1e-9);
    }

    #[test]
    fn roc_points_match_counts(g in scores(40), im in scores(40)) {
        let c = roc(&g, &im).unwrap();
        let mut distinct: Vec<f64> = g.iter().chain(&im).copied().collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        prop_assert_eq!(c.points.len(), distinct.len() + 1);
        for (p, t) in c.points.iter().zip(distinct.iter().copied().chain([f64::INFINITY])) {
            prop_assert_eq!(p.threshold, t);
            let fm = im.iter().filter(|&&x| x >= t).count() as f64 / im.len() as f64;
            let fnm = g.iter().filter(|&&x| x < t).count() as f64 / g.len() as f64;
            prop_assert_eq!(p.fmr, fm);
            prop_assert_eq!(p.fnmr, fnm);
        }
        prop_assert_eq!((c.points[0].fmr, c.points[0].fnmr), (1.0, 0.0));
        let last = c.points.last().unwrap();
        prop_assert_eq!((last.fmr, last.fnmr), (0.0, 1.0));
        for w in c.points.windows(2) {
            prop_assert!(w[1].fmr <= w[0].fmr && w[1].fnmr >= w[0].fnmr);
        }
    }

    #[test]
    fn eer_is_bracketed(g in scores(50), im in scores(50)) {
        let c = roc(&g, &im).unwrap();
        let e = eer(&c);
        let (p, q) = (c.points[e.bracket], c.points[e.bracket + 1]);
        prop_assert!(p.fmr - p.fnmr >= 0.0 && q.fmr - q.fnmr <= 0.0);
        let lo = p.fmr.min(q.fmr).min(p.fnmr).min(q.fnmr);
        let hi = p.fmr.max(q.fmr).max(p.fnmr).max(q.fnmr);
        prop_assert!(e.eer >= lo - 1e-12 && e.eer <= hi + 1e-12);
        // Interpolated FMR and FNMR coincide at the returned point.
        let alpha = if p.fmr - p.fnmr == q.fmr - q.fnmr { 0.0 } else { (p.fmr - p.fnmr) / ((p.fmr - p.fnmr) - (q.fmr - q.fnmr)) };
        let fnmr = p.fnmr + alpha * (q.fnmr - p.fnmr);
        prop_assert!((fnmr - e.eer).abs() <= 1e-12);
    }

    #[test]
    fn fnmr_at_fmr_is_monotone_in_target(g in scores(40), im in scores(40), t1 in 0.01f64..0.5, t2 in 0.5f64..0.99) {
        let c = roc(&g, &im).unwrap();
        let a = fnmr_at_fmr(&c, t1);
        let b = fnmr_at_fmr(&c, t2);
        prop_assert!(a.fnmr >= b.fnmr - 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.fnmr));
    }

    #[test]
    fn sweep_counts_non_increasing(
        maxima in prop::collection::vec(-2.0f64..2.0, 0..50),
        grid in prop::collection::vec(-2.5f64..2.5, 1..20),
    ) {
        let rows = lookalike_sweep(&maxima, &grid);
        prop_assert_eq!(rows.len(), grid.len());
        for w in rows.windows(2) {
            prop_assert!(w[0].threshold <= w[1].threshold);
            prop_assert!(w[1].count <= w[0].count);
        }
        for r in &rows {
            let want = maxima.iter().filter(|&&m| m >= r.threshold).count();
            prop_assert_eq!(r.count, want);
        }
    }

    #[test]
    fn pearson_affine_invariant(
        pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
        a in 0.1f64..10.0, b in -5.0f64..5.0, c in 0.1f64..10.0, d in -5.0f64..5.0,
    ) {
        let Ok(base) = correlate(&pts) else { return Ok(()) };
        let moved: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (a * x + b, c * y + d)).collect();
        let m = correlate(&moved).unwrap();
        prop_assert!((m.pearson_r - base.pearson_r).abs() <= 1e-9);
        prop_assert!((m.slope - base.slope * c / a).abs() <= 1e-9 * (1.0 + base.slope.abs() * c / a));
        prop_assert!((-1.0..=1.0).contains(&m.pearson_r));
    }

    #[test]
    fn bland_altman_limits_formula(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..2.0), 2..40)) {
        let ba = bland_altman(&pts, Normalization::MinMax).unwrap();
        let n = ba.points.len() as f64;
        let mean = ba.points.iter().map(|p| p.1).sum::<f64>() / n;
        let sd = (ba.points.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / n).sqrt();
        prop_assert!((ba.mean_diff - mean).abs() <= 1e-12);
        prop_assert!((ba.loa_high - (mean + 1.96 * sd)).abs() <= 1e-12);
        prop_assert!((ba.loa_low - (mean - 1.96 * sd)).abs() <= 1e-12);
        for p in &ba.points {
            prop_assert!((-1.0..=1.0).contains(&p.1) && (0.0..=1.0).contains(&p.0));
        }
    }
}

#[test]
fn chance_diagonal_for_equal_distributions() {
    let xs: Vec<f64> = (0..500).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
    let c = roc(&xs, &xs).unwrap();
    for p in &c.points {
        assert!((p.fmr + p.fnmr - 1.0).abs() <= 0.01, "{p:?}");
    }
    assert_eq!(mann_whitney_auc(&xs, &xs).unwrap(), 0.5);
}

#[test]
fn separable_and_all_tied() {
    let m = verification_metrics(&roc(&[0.9], &[0.1]).unwrap(), &[0.9], &[0.1], 1e-3).unwrap();
    assert_eq!((m.auc, m.eer.eer), (1.0, 0.0));
    assert_eq!(mann_whitney_auc(&[0.6, 0.4], &[0.5]).unwrap(), 0.5);
    assert_eq!(mann_whitney_auc(&[1.0f32; 3], &[1.0; 5]).unwrap(), 0.5);
}

#[test]
fn unreachable_target_reports_floor() {
    let g: Vec<f64> = (0..50).map(|i| 0.5 + i as f64 / 100.0).collect();
    let im: Vec<f64> = (0..200).map(|i| i as f64 / 400.0).collect();
    let c = roc(&g, &im).unwrap();
    let r = fnmr_at_fmr(&c, 1e-3);
    assert!(!r.reachable);
    assert_eq!(r.fmr_evaluated, 1.0 / 200.0);
}

#[test]
fn baseline_examples() {
    let b = similarity_baseline(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!((b.mean, b.q3, b.q4_threshold), (2.5, 3.25, 3.25));
    let flat = similarity_baseline(&[1.09; 10]).unwrap();
    assert_eq!((flat.mean, flat.q1, flat.q2, flat.q3), (1.09, 1.09, 1.09, 1.09));
}

#[test]
fn correlation_examples() {
    let line: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
    let c = correlate(&line).unwrap();
    assert_eq!((c.pearson_r, c.slope, c.intercept, c.n), (1.0, 2.0, 1.0, 10));
    let anti: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, -(i as f64))).collect();
    assert_eq!(correlate(&anti).unwrap().pearson_r, -1.0);
    let ba = bland_altman(&[(0.0, 1.0), (1.0, 0.0)], Normalization::MinMax).unwrap();
    assert_eq!((ba.mean_diff, ba.loa_low, ba.loa_high), (0.0, -1.96, 1.96));
}
