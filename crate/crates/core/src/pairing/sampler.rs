use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PairSpec;
use crate::error::{Error, Result};
use crate::head::Label;

/// Infinite seeded stream: each draw flips a fair coin between the positive
/// and the negative pool, then picks uniformly inside the chosen pool.
#[derive(Debug, Clone)]
pub struct BalancedSampler<T> {
    positives: Vec<T>,
    negatives: Vec<T>,
    rng: ChaCha8Rng,
}

impl<T: Clone> BalancedSampler<T> {
    pub fn from_pools(positives: Vec<T>, negatives: Vec<T>, seed: u64) -> Result<Self> {
        if positives.is_empty() || negatives.is_empty() {
            return Err(Error::DegeneratePool(format!(
                "{} positives and {} negatives; both pools need at least one pair",
                positives.len(),
                negatives.len()
            )));
        }
        Ok(Self {
            positives,
            negatives,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl<T: Clone> Iterator for BalancedSampler<T> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        let pool = if self.rng.gen_bool(0.5) {
            &self.positives
        } else {
            &self.negatives
        };
        Some(pool[self.rng.gen_range(0..pool.len())].clone())
    }
}

pub fn balanced_sampler(train: &[PairSpec], seed: u64) -> Result<BalancedSampler<PairSpec>> {
    let (pos, neg): (Vec<_>, Vec<_>) = train
        .iter()
        .filter(|p| p.label.is_some())
        .cloned()
        .partition(|p| p.label == Some(Label::Similar));
    BalancedSampler::from_pools(pos, neg, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fair_coin_within_three_sigma() {
        let s = BalancedSampler::from_pools(vec![true], vec![false], 42).unwrap();
        let pos = s.take(10_000).filter(|&p| p).count();
        let frac = pos as f64 / 10_000.0;
        assert!((0.47..=0.53).contains(&frac), "{frac}");
    }

    #[test]
    fn deterministic_per_seed() {
        let mk = |seed| BalancedSampler::from_pools(vec![1, 2, 3], vec![-1, -2], seed).unwrap();
        let a: Vec<i32> = mk(5).take(200).collect();
        let b: Vec<i32> = mk(5).take(200).collect();
        let c: Vec<i32> = mk(6).take(200).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn one_sided_pool_rejected() {
        assert!(matches!(
            BalancedSampler::from_pools(vec![1], Vec::<i32>::new(), 0),
            Err(Error::DegeneratePool(_))
        ));
    }
}
