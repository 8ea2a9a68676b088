#![allow(dead_code, clippy::needless_range_loop)]

use lookalike_core::datamodel::{Dataset, PairClass};
use lookalike_core::head::{Activation, HeadParams};
use lookalike_core::synth::{generate, SynthConfig};

pub fn synth_dataset(cfg: &SynthConfig) -> Dataset {
    let w = generate(cfg).unwrap();
    Dataset::join(w.graph, &w.images, &w.embeddings).unwrap()
}

pub fn small_world(seed: u64, twins: usize, singles: usize, images: usize, dim: usize) -> Dataset {
    synth_dataset(&SynthConfig {
        n_twin_pairs: twins,
        n_singles: singles,
        images_per_subject: images,
        dim,
        seed,
        ..SynthConfig::default()
    })
}

pub fn naive_cosine_mapped(u: &[f64], v: &[f64]) -> f64 {
    let mut uv = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for k in 0..u.len() {
        uv += u[k] * v[k];
        uu += u[k] * u[k];
        vv += v[k] * v[k];
    }
    0.5 * (1.0 + uv / (uu * vv).sqrt())
}

pub fn naive_l2(u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..u.len() {
        s += (u[k] - v[k]) * (u[k] - v[k]);
    }
    s.sqrt()
}

pub fn naive_project(head: &HeadParams<f64>, x: &[f64]) -> Vec<f64> {
    let layers: Vec<_> = head.layers().collect();
    let mut cur = x.to_vec();
    for (n, layer) in layers.iter().enumerate() {
        let mut next = vec![0.0; layer.d_out()];
        for r in 0..layer.d_out() {
            let mut acc = layer.bias()[r];
            for c in 0..layer.d_in() {
                acc += layer.weights()[r * layer.d_in() + c] * cur[c];
            }
            next[r] = if n + 1 < layers.len() && head.activation() == Activation::Tanh {
                acc.tanh()
            } else {
                acc
            };
        }
        cur = next;
    }
    cur
}

/// Every unordered image pair `(i, j, class)` of different subjects, by double loop.
pub fn naive_nonmated(ds: &Dataset) -> Vec<(usize, usize, PairClass)> {
    let mut out = Vec::new();
    for i in 0..ds.image_count() {
        for j in 0..ds.image_count() {
            if i < j && ds.subject_of(i) != ds.subject_of(j) {
                let class = ds
                    .graph()
                    .classify_pair(ds.subject_id(ds.subject_of(i)), ds.subject_id(ds.subject_of(j)))
                    .unwrap();
                out.push((i, j, class));
            }
        }
    }
    out
}
