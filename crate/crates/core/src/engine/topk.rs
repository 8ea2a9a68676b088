use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::{MatchJob, Prepared};
use crate::error::{Error, Result};

/// A pair and its primary score; `a < b` are dataset image indices, which
/// follow image-id order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedPair {
    pub a: usize,
    pub b: usize,
    pub score: f64,
}

/// Ordered so that `Greater` means "ranks higher": larger score, then
/// smaller `(a, b)`.
impl Ord for RankedPair {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

impl PartialOrd for RankedPair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Eq for RankedPair {}

struct Capped {
    k: usize,
    heap: BinaryHeap<Reverse<RankedPair>>,
}

impl Capped {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    fn offer(&mut self, p: RankedPair) {
        if self.heap.len() < self.k {
            self.heap.push(Reverse(p));
        } else if let Some(Reverse(worst)) = self.heap.peek() {
            if p > *worst {
                self.heap.pop();
                self.heap.push(Reverse(p));
            }
        }
    }

    fn merge(mut self, other: Capped) -> Capped {
        for Reverse(p) in other.heap {
            self.offer(p);
        }
        self
    }
}

/// The `k` highest-scoring pairs admitted by the job's filter, best first.
/// Equal scores are ordered by ascending `(image_a, image_b)`.
pub fn top_k_pairs(job: &MatchJob<'_>, k: usize) -> Result<Vec<RankedPair>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    job.validate()?;
    let pool = job.pool()?;
    let prep = Prepared::new(job, &pool)?;
    let best = pool.install(|| {
        job.blocks()
            .par_iter()
            .fold(
                || Capped::new(k),
                |mut heap, &blk| {
                    job.for_each_pair(blk, |a, b| {
                        heap.offer(RankedPair {
                            a,
                            b,
                            score: prep.score(a, b),
                        })
                    });
                    heap
                },
            )
            .reduce(|| Capped::new(k), Capped::merge)
    });
    let mut out: Vec<RankedPair> = best.heap.into_iter().map(|Reverse(p)| p).collect();
    out.sort_by(|x, y| y.cmp(x));
    Ok(out)
}
