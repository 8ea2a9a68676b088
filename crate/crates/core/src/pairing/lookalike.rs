use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::datamodel::{Dataset, SubjectId};
use crate::error::{Error, Result};

/// Twin subject -> its look-alikes, best first.
pub type LookalikeMap = BTreeMap<SubjectId, Vec<SubjectId>>;

/// Highest image-pair score between two subjects.
fn best_score<F>(ds: &Dataset, s: usize, t: usize, scorer: &F) -> Option<f64>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let mut best: Option<f64> = None;
    for &i in ds.images_of(s) {
        for &j in ds.images_of(t) {
            let v = scorer(ds.vector(i), ds.vector(j));
            best = Some(match best {
                Some(b) if b.total_cmp(&v) != Ordering::Less => b,
                _ => v,
            });
        }
    }
    best
}

/// For every twin subject, the `k` unrelated subjects whose best image pair
/// scores highest under `scorer` (higher means more alike). Ties go to the
/// smaller subject id. The subject itself, its twin and its family are never
/// candidates, nor are subjects without images.
pub fn mine_lookalikes<F>(ds: &Dataset, scorer: F, k: usize) -> Result<LookalikeMap>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    if k == 0 {
        return Err(Error::Config("look-alike count k must be at least 1".into()));
    }
    let rel = ds.relations();
    let twins: Vec<usize> = (0..ds.subject_count())
        .filter(|&s| rel.twin_of(s).is_some() && !ds.images_of(s).is_empty())
        .collect();
    twins
        .par_iter()
        .map(|&s| {
            let mut scored: Vec<(f64, usize)> = (0..ds.subject_count())
                .filter(|&t| t != s && !rel.are_related(s, t))
                .filter_map(|t| best_score(ds, s, t, &scorer).map(|v| (v, t)))
                .collect();
            if scored.len() < k {
                return Err(Error::InsufficientCandidates {
                    subject: ds.subject_id(s).to_string(),
                    needed: k,
                    available: scored.len(),
                });
            }
            // Subject indices follow subject-id order, so the index is the tie-break.
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let picks = scored[..k].iter().map(|&(_, t)| ds.subject_id(t).clone()).collect();
            Ok((ds.subject_id(s).clone(), picks))
        })
        .collect()
}

/// Keep the identical-twin pairs whose best cross-twin score is in the top
/// `fraction`. Returns the member subjects of the kept pairs.
pub fn select_top_twin_pairs<F>(ds: &Dataset, scorer: F, fraction: f64) -> Result<BTreeSet<SubjectId>>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config("twin selection fraction must lie in (0, 1]".into()));
    }
    let rel = ds.relations();
    let mut units: Vec<(f64, usize, usize)> = (0..ds.subject_count())
        .filter_map(|s| match rel.twin_of(s) {
            Some((t, kind)) if s < t && kind.is_identical() => best_score(ds, s, t, &scorer).map(|v| (v, s, t)),
            _ => None,
        })
        .collect();
    units.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let keep = ((units.len() as f64) * fraction).round() as usize;
    Ok(units
        .into_iter()
        .take(keep.max(1))
        .flat_map(|(_, s, t)| [ds.subject_id(s).clone(), ds.subject_id(t).clone()])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::dataset;

    fn neg_l2(u: &[f64], v: &[f64]) -> f64 {
        -crate::scalar::l2_distance(u, v)
    }

    fn sid(s: &str) -> SubjectId {
        SubjectId::new(s).unwrap()
    }

    #[test]
    fn nearest_unrelated() {
        let ds = dataset(
            &[("a", &[&[0.0]]), ("at", &[&[0.1]]), ("c", &[&[0.2]]), ("d", &[&[5.0]])],
            &[("a", "at")],
            &[],
        );
        let m = mine_lookalikes(&ds, neg_l2, 1).unwrap();
        assert_eq!(m[&sid("a")], [sid("c")]);
        assert_eq!(m[&sid("at")], [sid("c")]);
        assert_eq!(m.len(), 2);
        assert!(matches!(
            mine_lookalikes(&ds, neg_l2, 3),
            Err(Error::InsufficientCandidates {
                needed: 3,
                available: 2,
                ..
            })
        ));
    }

    #[test]
    fn ties_go_to_smaller_id_and_family_excluded() {
        let ds = dataset(
            &[
                ("a", &[&[0.0]]),
                ("b", &[&[9.0]]),
                ("f", &[&[0.0]]),
                ("x", &[&[1.0]]),
                ("w", &[&[-1.0]]),
            ],
            &[("a", "b")],
            &[("a", "f")],
        );
        let m = mine_lookalikes(&ds, neg_l2, 2).unwrap();
        assert_eq!(m[&sid("a")], [sid("w"), sid("x")]);
    }

    #[test]
    fn top_twin_selection() {
        let ds = dataset(
            &[("a", &[&[0.0]]), ("b", &[&[0.1]]), ("c", &[&[5.0]]), ("d", &[&[7.0]])],
            &[("a", "b"), ("c", "d")],
            &[],
        );
        let keep = select_top_twin_pairs(&ds, neg_l2, 0.5).unwrap();
        assert_eq!(keep.into_iter().collect::<Vec<_>>(), [sid("a"), sid("b")]);
    }
}
