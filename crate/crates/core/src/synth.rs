//! Seeded synthetic twin world.
//!
//! Generator: ChaCha20 (`rand_chacha::ChaCha20Rng::seed_from_u64`), read as
//! raw 64-bit words. A uniform in `[0, 1)` is the top 53 bits scaled by
//! `2^-53`. Only `+ - * /` and `sqrt` are applied to those values, so the
//! output is the same on every IEEE-754 platform.
//!
//! Layout: each twin pair and each single is placed in turn. A subject
//! centroid is uniform in `[-spread, spread]^dim`; a co-twin centroid is that
//! centroid plus a random direction scaled to exactly `delta_twin`. Candidates
//! closer than `2 * delta_twin + 4 * sigma_image` to any earlier centroid are
//! redrawn. Image noise is uniform in the ball of radius `sigma_image`:
//! an approximately normal direction (sum of 12 uniforms minus 6 per
//! coordinate, normalized) times `sigma_image * max(u_1..u_dim)`.
//!
//! With that spacing every identical-twin image pair is strictly closer than
//! every unrelated image pair.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::datamodel::{
    EmbeddingRecord, EmbeddingStore, IdentityGraph, ImageId, ImageMap, PairClass, SubjectId, TwinKind,
};
use crate::error::{Error, Result};

pub const SYNTH_TAG: &str = "synth";
const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_twin_pairs: usize,
    pub n_singles: usize,
    pub images_per_subject: usize,
    pub dim: usize,
    pub sigma_image: f64,
    pub delta_twin: f64,
    pub spread: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_twin_pairs: 100,
            n_singles: 0,
            images_per_subject: 4,
            dim: 64,
            sigma_image: 0.05,
            delta_twin: 0.3,
            spread: 3.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Requires `0 <= sigma_image < delta_twin < spread`. A zero sigma is
    /// accepted and yields noise-free images.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.sigma_image, self.delta_twin, self.spread]
            .iter()
            .all(|x| x.is_finite());
        if !finite || !(0.0 <= self.sigma_image && self.sigma_image < self.delta_twin && self.delta_twin < self.spread)
        {
            return Err(Error::Config(format!(
                "synth scales must satisfy 0 <= sigma_image < delta_twin < spread (got {}, {}, {})",
                self.sigma_image, self.delta_twin, self.spread
            )));
        }
        if self.dim == 0 {
            return Err(Error::Config("synth dim must be at least 1".into()));
        }
        Ok(())
    }

    pub fn subject_count(&self) -> usize {
        2 * self.n_twin_pairs + self.n_singles
    }

    fn min_separation(&self) -> f64 {
        2.0 * self.delta_twin + 4.0 * self.sigma_image
    }
}

/// Expected relationship and centroid distance of two generated subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectPairTruth {
    pub a: SubjectId,
    pub b: SubjectId,
    pub class: PairClass,
    pub centroid_distance: f64,
}

/// Generation-time facts the outputs do not carry.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub centroids: BTreeMap<SubjectId, Vec<f64>>,
    pub twins: Vec<(SubjectId, SubjectId)>,
}

impl GroundTruth {
    pub fn centroid_distance(&self, a: &SubjectId, b: &SubjectId) -> Option<f64> {
        Some(crate::scalar::l2_distance(
            self.centroids.get(a)?,
            self.centroids.get(b)?,
        ))
    }

    pub fn expected_class(&self, a: &SubjectId, b: &SubjectId) -> PairClass {
        if a == b {
            PairClass::SameSubject
        } else if self.twins.iter().any(|(x, y)| (x == a && y == b) || (x == b && y == a)) {
            PairClass::IdenticalTwin
        } else {
            PairClass::NoRelation
        }
    }

    /// Every unordered subject pair in ascending id order.
    pub fn pairs(&self) -> Vec<SubjectPairTruth> {
        let ids: Vec<&SubjectId> = self.centroids.keys().collect();
        let mut out = Vec::new();
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                out.push(SubjectPairTruth {
                    a: (*a).clone(),
                    b: (*b).clone(),
                    class: self.expected_class(a, b),
                    centroid_distance: l2(&self.centroids[*a], &self.centroids[*b]),
                });
            }
        }
        out
    }
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    crate::scalar::l2_distance(a, b)
}

#[derive(Debug, Clone)]
pub struct SynthWorld {
    pub graph: IdentityGraph,
    pub images: ImageMap,
    pub embeddings: EmbeddingStore,
    pub truth: GroundTruth,
}

struct Draw(ChaCha20Rng);

impl Draw {
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn symmetric(&mut self, scale: f64) -> f64 {
        (2.0 * self.uniform() - 1.0) * scale
    }

    fn direction(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim)
                .map(|_| (0..12).map(|_| self.uniform()).sum::<f64>() - 6.0)
                .collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }

    fn ball(&mut self, dim: usize, radius: f64) -> Vec<f64> {
        let dir = self.direction(dim);
        let r = radius * (0..dim).map(|_| self.uniform()).fold(0.0, f64::max);
        dir.into_iter().map(|x| x * r).collect()
    }
}

fn subject(name: String) -> SubjectId {
    SubjectId::new(name).expect("generated ids are valid")
}

pub fn generate(config: &SynthConfig) -> Result<SynthWorld> {
    config.validate()?;
    let mut rng = Draw(ChaCha20Rng::seed_from_u64(config.seed));
    let d = config.dim;
    let sep = config.min_separation();
    let mut placed: Vec<Vec<f64>> = Vec::with_capacity(config.subject_count());
    let far = |placed: &[Vec<f64>], c: &[f64]| placed.iter().all(|p| l2(p, c) >= sep);

    let mut centroids = BTreeMap::new();
    let mut twins = Vec::new();
    let mut builder = IdentityGraph::builder();

    for k in 0..config.n_twin_pairs + config.n_singles {
        let is_pair = k < config.n_twin_pairs;
        let mut attempt = 0;
        let group = loop {
            attempt += 1;
            if attempt > MAX_ATTEMPTS {
                return Err(Error::Config(format!(
                    "cannot place {} subjects {sep} apart in [-{s}, {s}]^{d}; raise spread or dim",
                    config.subject_count(),
                    s = config.spread
                )));
            }
            let c: Vec<f64> = (0..d).map(|_| rng.symmetric(config.spread)).collect();
            let mut group = vec![c];
            if is_pair {
                let dir = rng.direction(d);
                let twin = group[0]
                    .iter()
                    .zip(&dir)
                    .map(|(x, u)| x + u * config.delta_twin)
                    .collect();
                group.push(twin);
            }
            if group.iter().all(|c| far(&placed, c)) {
                break group;
            }
        };
        let ids: Vec<SubjectId> = if is_pair {
            vec![subject(format!("t{k:05}a")), subject(format!("t{k:05}b"))]
        } else {
            vec![subject(format!("s{:05}", k - config.n_twin_pairs))]
        };
        for (id, c) in ids.iter().zip(group) {
            builder.subject(id.clone(), SYNTH_TAG, true)?;
            placed.push(c.clone());
            centroids.insert(id.clone(), c);
        }
        if is_pair {
            builder.twin(ids[0].clone(), ids[1].clone(), TwinKind::Identical);
            twins.push((ids[0].clone(), ids[1].clone()));
        }
    }
    let graph = builder.build()?;

    let mut images = ImageMap::default();
    let mut records = Vec::with_capacity(config.subject_count() * config.images_per_subject);
    for (id, c) in &centroids {
        for i in 0..config.images_per_subject {
            let image = ImageId::new(format!("{id}_{i:03}"))?;
            let noise = rng.ball(d, config.sigma_image);
            let vector = c.iter().zip(&noise).map(|(x, e)| (x + e) as f32).collect();
            images.insert(image.clone(), id.clone())?;
            records.push(EmbeddingRecord { image, vector });
        }
    }
    Ok(SynthWorld {
        graph,
        images,
        embeddings: EmbeddingStore::new(d, records)?,
        truth: GroundTruth { centroids, twins },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Dataset;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_twin_pairs: 6,
            n_singles: 5,
            images_per_subject: 3,
            dim: 8,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn cardinality() {
        let w = generate(&SynthConfig {
            n_twin_pairs: 1,
            n_singles: 0,
            images_per_subject: 1,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_eq!(w.graph.subject_count(), 2);
        assert_eq!(w.embeddings.len(), 2);
        assert_eq!(w.graph.twin_edges().count(), 1);
    }

    #[test]
    fn zero_noise_images_coincide() {
        let w = generate(&SynthConfig {
            sigma_image: 0.0,
            ..small(3)
        })
        .unwrap();
        let recs = w.embeddings.records();
        assert_eq!(recs[0].vector, recs[1].vector);
    }

    #[test]
    fn twin_offset_is_delta() {
        let cfg = small(9);
        let w = generate(&cfg).unwrap();
        for (a, b) in &w.truth.twins {
            let d = w.truth.centroid_distance(a, b).unwrap();
            assert!((d - cfg.delta_twin).abs() < 1e-12, "{d}");
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let enc = |w: &SynthWorld| {
            let mut v = Vec::new();
            w.embeddings.write_to(&mut v).unwrap();
            v
        };
        assert_eq!(enc(&generate(&small(5)).unwrap()), enc(&generate(&small(5)).unwrap()));
        assert_ne!(enc(&generate(&small(5)).unwrap()), enc(&generate(&small(6)).unwrap()));
    }

    #[test]
    fn bad_scales_rejected() {
        for (s, d, sp) in [
            (0.3, 0.3, 3.0),
            (0.05, 3.0, 3.0),
            (-0.1, 0.3, 3.0),
            (0.05, 0.3, f64::NAN),
        ] {
            let cfg = SynthConfig {
                sigma_image: s,
                delta_twin: d,
                spread: sp,
                ..SynthConfig::default()
            };
            assert!(matches!(generate(&cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn joins_cleanly() {
        let w = generate(&small(1)).unwrap();
        let ds = Dataset::join(w.graph, &w.images, &w.embeddings).unwrap();
        assert_eq!(ds.image_count(), 17 * 3);
    }
}
