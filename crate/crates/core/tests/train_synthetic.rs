mod common;

use std::time::Instant;

use common::synth_dataset;
use lookalike_core::analysis::{roc, verification_metrics};
use lookalike_core::head::{train, HeadParams, Label, TrainConfig, TrainData, TrainPair};
use lookalike_core::pairing::{build_training_set, mine_lookalikes, TrainingSetConfig};
use lookalike_core::scalar::l2_distance;
use lookalike_core::scoring::{comparison_score, ComparisonMetric};
use lookalike_core::synth::SynthConfig;

#[test]
fn held_out_verification_on_synthetic_world() {
    let start = Instant::now();
    let ds = synth_dataset(&SynthConfig {
        n_twin_pairs: 100,
        n_singles: 0,
        images_per_subject: 4,
        sigma_image: 0.05,
        delta_twin: 0.3,
        spread: 3.0,
        seed: 17,
        ..SynthConfig::default()
    });
    let cosine = |u: &[f64], v: &[f64]| comparison_score(u, v, ComparisonMetric::CosineMapped).unwrap().value;
    let lookalikes = mine_lookalikes(&ds, cosine, 10).unwrap();
    let set = build_training_set(
        &ds,
        &lookalikes,
        &TrainingSetConfig {
            split_fraction: 0.8,
            seed: 17,
            twin_filter: None,
        },
    )
    .unwrap();
    let data = TrainData::<f64>::from_dataset(&ds);
    let train_pairs = TrainPair::resolve(&set.train, &ds).unwrap();
    let test_pairs = TrainPair::resolve(&set.test, &ds).unwrap();
    let config = TrainConfig {
        learning_rate: 1e-3,
        seed: 17,
        ..TrainConfig::default()
    };
    let init = HeadParams::init_near_identity(ds.dim(), 64, None, 17).unwrap();
    let out = train(init, &data, &train_pairs, &test_pairs, &config).unwrap();
    assert_eq!(out.history.len(), 4);
    assert!(out.history.last().unwrap().mean_loss <= out.history[0].mean_loss);

    let proj: Vec<Vec<f64>> = (0..data.len())
        .map(|i| out.params.forward(data.row(i)).unwrap())
        .collect();
    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for p in &test_pairs {
        let s = -l2_distance(&proj[p.a], &proj[p.b]);
        match p.label {
            Label::Similar => genuine.push(s),
            Label::Dissimilar => impostor.push(s),
        }
    }
    let curve = roc(&genuine, &impostor).unwrap();
    let m = verification_metrics(&curve, &genuine, &impostor, 1e-3).unwrap();
    assert!(m.auc >= 0.99, "auc {}", m.auc);
    assert!(m.eer.eer <= 0.05, "eer {}", m.eer.eer);
    assert!(start.elapsed().as_secs() < 60);
}
