mod common;

use std::collections::BTreeSet;

use common::{naive_nonmated, small_world, synth_dataset};
use lookalike_core::datamodel::{
    Dataset, EmbeddingRecord, EmbeddingStore, IdentityGraph, ImageId, ImageMap, SubjectId, TwinKind,
};
use lookalike_core::head::Label;
use lookalike_core::pairing::{
    build_training_set, enumerate_mated, enumerate_nonmated, mine_lookalikes, nonmated_pair_count, TrainingSetConfig,
};
use lookalike_core::scalar::l2_distance;
use lookalike_core::synth::SynthConfig;
use proptest::prelude::*;

fn neg_l2(u: &[f64], v: &[f64]) -> f64 {
    -l2_distance(u, v)
}

/// Subjects `s0..` with the given image counts; consecutive pairs twinned
/// when `twins`, a family edge between subjects 0 and 2 when `family`.
fn world(counts: &[usize], twins: bool, family: bool) -> Dataset {
    let ids: Vec<SubjectId> = (0..counts.len())
        .map(|i| SubjectId::new(format!("s{i:03}")).unwrap())
        .collect();
    let mut b = IdentityGraph::builder();
    for id in &ids {
        b.subject(id.clone(), "p", true).unwrap();
    }
    if twins {
        for k in (0..ids.len() / 2).map(|k| 2 * k) {
            b.twin(ids[k].clone(), ids[k + 1].clone(), TwinKind::Identical);
        }
    }
    if family && ids.len() > 3 {
        b.family(ids[0].clone(), ids[3].clone(), "cousin");
    }
    let graph = b.build().unwrap();
    let mut map = ImageMap::default();
    let mut recs = Vec::new();
    let mut n = 0u32;
    for (id, &k) in ids.iter().zip(counts) {
        for _ in 0..k {
            let image = ImageId::new(format!("img{n:05}")).unwrap();
            map.insert(image.clone(), id.clone()).unwrap();
            let x = (n as f32 * 0.618).fract();
            recs.push(EmbeddingRecord {
                image,
                vector: vec![x, 1.0 - x],
            });
            n += 1;
        }
    }
    Dataset::join(graph, &map, &EmbeddingStore::new(2, recs).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nonmated_count_matches_double_loop(counts in prop::collection::vec(0usize..8, 1..40)) {
        prop_assume!(counts.iter().sum::<usize>() <= 200);
        let ds = world(&counts, true, true);
        let naive = naive_nonmated(&ds);
        let got: Vec<_> = enumerate_nonmated(&ds).collect();
        prop_assert_eq!(got.len(), naive.len());
        prop_assert_eq!(nonmated_pair_count(&ds) as usize, naive.len());
        for (p, (i, j, c)) in got.iter().zip(&naive) {
            prop_assert_eq!(&p.a, ds.image_id(*i));
            prop_assert_eq!(&p.b, ds.image_id(*j));
            prop_assert_eq!(&p.pair_class, c);
        }
        let mated: usize = counts.iter().map(|k| k * k.saturating_sub(1) / 2).sum();
        prop_assert_eq!(enumerate_mated(&ds).count(), mated);
    }

    #[test]
    fn lookalikes_exclude_self_twin_family(counts in prop::collection::vec(1usize..4, 6..20), k in 1usize..4) {
        let ds = world(&counts, true, true);
        let map = mine_lookalikes(&ds, neg_l2, k).unwrap();
        for (s, list) in &map {
            prop_assert_eq!(list.len(), k);
            for l in list {
                prop_assert!(l != s);
                prop_assert!(!ds.graph().are_related(s, l));
            }
            let uniq: BTreeSet<_> = list.iter().collect();
            prop_assert_eq!(uniq.len(), k);
        }
    }
}

#[test]
fn no_leakage_over_100_seeds() {
    let ds = small_world(7, 12, 10, 3, 6);
    let map = mine_lookalikes(&ds, neg_l2, 3).unwrap();
    for seed in 0..100 {
        let set = build_training_set(
            &ds,
            &map,
            &TrainingSetConfig {
                split_fraction: 0.8,
                seed,
                twin_filter: None,
            },
        )
        .unwrap();
        let (tr, te) = (&set.split.train_subjects, &set.split.test_subjects);
        assert!(tr.is_disjoint(te), "seed {seed}");
        let owner = |img: &ImageId| ds.subject_id(ds.subject_of(ds.image_index(img).unwrap())).clone();
        for p in &set.train {
            assert!(tr.contains(&owner(&p.a)) && tr.contains(&owner(&p.b)));
        }
        for p in &set.test {
            assert!(te.contains(&owner(&p.a)) && te.contains(&owner(&p.b)));
        }
        for side in [&set.train, &set.test] {
            let pos = side.iter().filter(|p| p.label == Some(Label::Similar)).count();
            assert_eq!(2 * pos, side.len());
        }
    }
}

#[test]
fn large_dataset_split_shape() {
    // 645 identities in 322 twin pairs plus one unpaired subject; 3,203 images.
    let mut counts = vec![5usize; 645];
    let extra: usize = counts.iter().sum::<usize>() - 3203;
    for c in counts.iter_mut().take(extra) {
        *c = 4;
    }
    let ds = world(&counts, true, false);
    assert_eq!(ds.image_count(), 3203);
    assert_eq!(ds.subject_count(), 645);
    let map = mine_lookalikes(&ds, neg_l2, 1).unwrap();
    let set = build_training_set(
        &ds,
        &map,
        &TrainingSetConfig {
            split_fraction: 0.8,
            seed: 1,
            twin_filter: None,
        },
    )
    .unwrap();
    let twins_in = |s: &BTreeSet<SubjectId>| s.iter().filter(|id| ds.graph().twin_of(id).is_some()).count();
    let train_twins = twins_in(&set.split.train_subjects) as f64;
    let test_twins = twins_in(&set.split.test_subjects) as f64;
    assert_eq!(train_twins + test_twins, 644.0);
    assert_eq!(train_twins, 2.0 * (322.0f64 * 0.8).round());
    assert!((train_twins / 644.0 - 0.8).abs() < 0.01);
    assert!(set.split.train_subjects.is_disjoint(&set.split.test_subjects));
}

#[test]
fn synthetic_world_mines_unrelated_lookalikes() {
    let ds = synth_dataset(&SynthConfig {
        n_twin_pairs: 10,
        n_singles: 10,
        images_per_subject: 2,
        dim: 6,
        seed: 3,
        ..SynthConfig::default()
    });
    let map = mine_lookalikes(&ds, neg_l2, 2).unwrap();
    assert_eq!(map.len(), 20);
}
