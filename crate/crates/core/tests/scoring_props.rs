use lookalike_core::scoring::{comparison_score, invert_scores, invert_with_reference, ComparisonMetric};
use proptest::prelude::*;

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] < v[b] { i } else { b })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn inversion_reverses_rank(raw in prop::collection::vec(0.0f64..10.0, 1..30)) {
        let (inv, reference) = invert_scores(&raw).unwrap();
        prop_assert_eq!(argmax(&raw), argmin(&inv));
        prop_assert!(inv.iter().all(|&s| s >= 0.0));
        prop_assert_eq!(reference, raw[argmax(&raw)]);
        for i in 0..raw.len() {
            for j in 0..raw.len() {
                if raw[i] < raw[j] {
                    prop_assert!(inv[i] > inv[j]);
                }
            }
        }
    }

    #[test]
    fn calibrated_inversion_is_monotone(raw in prop::collection::vec(0.0f64..10.0, 1..30), r in 0.0f64..10.0) {
        let inv = invert_with_reference(&raw, r);
        for i in 0..raw.len() {
            prop_assert!(inv[i] >= 0.0);
            prop_assert_eq!(inv[i], (r - raw[i]).max(0.0));
            for j in 0..raw.len() {
                if raw[i] <= raw[j] {
                    prop_assert!(inv[i] >= inv[j]);
                }
            }
        }
    }

    #[test]
    fn comparison_scores_in_unit_range(
        u in prop::collection::vec(-5.0f64..5.0, 4),
        v in prop::collection::vec(-5.0f64..5.0, 4),
    ) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
        for m in [ComparisonMetric::CosineMapped, ComparisonMetric::InverseL2] {
            let s = comparison_score(&u, &v, m).unwrap().value;
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s, comparison_score(&v, &u, m).unwrap().value);
        }
    }
}

#[test]
fn comparison_fixed_points() {
    let c = |u: &[f64], v: &[f64]| comparison_score(u, v, ComparisonMetric::CosineMapped).unwrap().value;
    assert_eq!(c(&[1.0, 2.0], &[2.0, 4.0]), 1.0);
    assert_eq!(c(&[1.0, 2.0], &[-1.0, -2.0]), 0.0);
    assert_eq!(c(&[1.0, 0.0], &[0.0, 3.0]), 0.5);
    let l = comparison_score(&[0.0, 0.0], &[3.0, 4.0], ComparisonMetric::InverseL2)
        .unwrap()
        .value;
    assert_eq!(l, 1.0 / 6.0);
    assert!(comparison_score(&[0.0, 0.0], &[1.0, 0.0], ComparisonMetric::CosineMapped).is_err());
}
