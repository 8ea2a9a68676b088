use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LookalikeMap, PairSpec};
use crate::datamodel::{Dataset, SubjectId};
use crate::error::{Error, Result};
use crate::head::Label;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSetConfig {
    /// Share of identical-twin pairs assigned to the training side.
    pub split_fraction: f64,
    pub seed: u64,
    /// When set, only twin pairs with both members in the set are used.
    pub twin_filter: Option<BTreeSet<SubjectId>>,
}

impl Default for TrainingSetConfig {
    fn default() -> Self {
        Self {
            split_fraction: 0.8,
            seed: 0,
            twin_filter: None,
        }
    }
}

/// Subject-disjoint train/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTestSplit {
    pub train_subjects: BTreeSet<SubjectId>,
    pub test_subjects: BTreeSet<SubjectId>,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub train: Vec<PairSpec>,
    pub test: Vec<PairSpec>,
    pub split: TrainTestSplit,
}

struct Side {
    pairs: Vec<PairSpec>,
    subjects: BTreeSet<usize>,
}

/// Build labelled twin-positive / look-alike-negative pairs and split them by
/// twin pair.
///
/// Positives (`y = 0`) are every image pair across the two members of an
/// identical (or mirror) twin pair. Negatives (`y = 1`) pair each twin's
/// images with the images of that twin's look-alikes. Per twin pair the larger
/// of the two lists is shuffled and truncated so positives and negatives are
/// equal in number. Twin pairs are shuffled with `seed` and the first
/// `round(fraction * n)` go to training. Training skips look-alikes that are
/// test twins and test skips every subject used in training, so no subject
/// appears on both sides.
pub fn build_training_set(ds: &Dataset, lookalikes: &LookalikeMap, config: &TrainingSetConfig) -> Result<TrainingSet> {
    let fraction = config.split_fraction;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config("split_fraction must lie strictly between 0 and 1".into()));
    }
    let rel = ds.relations();
    let keep = |s: usize| config.twin_filter.as_ref().is_none_or(|f| f.contains(ds.subject_id(s)));
    let mut units: Vec<(usize, usize)> = (0..ds.subject_count())
        .filter_map(|s| match rel.twin_of(s) {
            Some((t, kind)) if s < t && kind.is_identical() && keep(s) && keep(t) => Some((s, t)),
            _ => None,
        })
        .collect();
    if units.is_empty() {
        return Err(Error::EmptyTrainingSet("no identical-twin pairs available".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    units.shuffle(&mut rng);
    let n_train = if units.len() == 1 {
        1
    } else {
        ((units.len() as f64 * fraction).round() as usize).clamp(1, units.len() - 1)
    };
    let (train_units, test_units) = units.split_at(n_train);
    let twin_members = |us: &[(usize, usize)]| -> BTreeSet<usize> { us.iter().flat_map(|&(a, b)| [a, b]).collect() };

    let test_twins = twin_members(test_units);
    let train = build_side(ds, lookalikes, train_units, &test_twins, &mut rng)?;
    let test = build_side(ds, lookalikes, test_units, &train.subjects, &mut rng)?;

    if train.pairs.is_empty() {
        return Err(Error::EmptyTrainingSet(
            "no twin pair produced both positive and negative image pairs".into(),
        ));
    }
    let ids = |s: &BTreeSet<usize>| s.iter().map(|&i| ds.subject_id(i).clone()).collect();
    Ok(TrainingSet {
        split: TrainTestSplit {
            train_subjects: ids(&train.subjects),
            test_subjects: ids(&test.subjects),
            fraction,
        },
        train: train.pairs,
        test: test.pairs,
    })
}

fn build_side(
    ds: &Dataset,
    lookalikes: &LookalikeMap,
    units: &[(usize, usize)],
    blocked: &BTreeSet<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<Side> {
    let mut side = Side {
        pairs: Vec::new(),
        subjects: BTreeSet::new(),
    };
    let cross = |x: usize, y: usize, label: Label| -> Vec<PairSpec> {
        ds.images_of(x)
            .iter()
            .flat_map(|&i| {
                ds.images_of(y).iter().map(move |&j| PairSpec {
                    a: ds.image_id(i).clone(),
                    b: ds.image_id(j).clone(),
                    label: Some(label),
                    pair_class: ds.classify_images(i, j),
                })
            })
            .collect()
    };
    for &(a, b) in units {
        side.subjects.extend([a, b]);
        let mut positives = cross(a, b, Label::Similar);
        let mut negatives = Vec::new();
        for twin in [a, b] {
            let Some(list) = lookalikes.get(ds.subject_id(twin)) else {
                continue;
            };
            for l in list {
                let li = ds
                    .subject_index(l)
                    .ok_or_else(|| Error::UnknownSubject(l.to_string()))?;
                if blocked.contains(&li) {
                    continue;
                }
                let pairs = cross(twin, li, Label::Dissimilar);
                if !pairs.is_empty() {
                    side.subjects.insert(li);
                    negatives.extend(pairs);
                }
            }
        }
        let n = positives.len().min(negatives.len());
        positives.shuffle(rng);
        negatives.shuffle(rng);
        positives.truncate(n);
        negatives.truncate(n);
        side.pairs.extend(positives);
        side.pairs.extend(negatives);
    }
    Ok(side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{dataset, grid};

    fn sid(s: &str) -> SubjectId {
        SubjectId::new(s).unwrap()
    }

    fn world() -> (Dataset, LookalikeMap) {
        let two: &[&[f32]] = &[&[0.0], &[0.1]];
        let ds = dataset(
            &[("a", two), ("b", two), ("c", two), ("d", two), ("x", two), ("y", two)],
            &[("a", "b"), ("c", "d")],
            &[],
        );
        let mut m = LookalikeMap::new();
        for (t, l) in [("a", "x"), ("b", "x"), ("c", "y"), ("d", "y")] {
            m.insert(sid(t), vec![sid(l)]);
        }
        (ds, m)
    }

    #[test]
    fn half_split_is_disjoint_and_balanced() {
        let (ds, m) = world();
        let cfg = TrainingSetConfig {
            split_fraction: 0.5,
            seed: 4,
            twin_filter: None,
        };
        let set = build_training_set(&ds, &m, &cfg).unwrap();
        assert!(set.split.train_subjects.is_disjoint(&set.split.test_subjects));
        assert_eq!(set.split.train_subjects.len(), 3);
        assert_eq!(set.split.test_subjects.len(), 3);
        for side in [&set.train, &set.test] {
            let pos = side.iter().filter(|p| p.label == Some(Label::Similar)).count();
            assert_eq!(pos, 4);
            assert_eq!(side.len(), 8);
        }
        assert_eq!(set, build_training_set(&ds, &m, &cfg).unwrap());
    }

    #[test]
    fn needs_twins() {
        let ds = grid(4, 2);
        let cfg = TrainingSetConfig {
            split_fraction: 0.8,
            seed: 0,
            twin_filter: None,
        };
        assert!(matches!(
            build_training_set(&ds, &LookalikeMap::new(), &cfg),
            Err(Error::EmptyTrainingSet(_))
        ));
    }
}
