use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Percentile of an ascending slice by linear interpolation between order
/// statistics at rank `p * (n - 1)`, `p` in `[0, 1]`.
pub fn percentile<S: Scalar>(sorted: &[S], p: S) -> S {
    assert!(!sorted.is_empty());
    let pos = p * S::from_count(sorted.len() - 1);
    let lo = pos.floor();
    let i = lo.to_usize().unwrap_or(0).min(sorted.len() - 1);
    let frac = pos - lo;
    if i + 1 >= sorted.len() || frac == S::zero() {
        return sorted[i];
    }
    sorted[i] + frac * (sorted[i + 1] - sorted[i])
}

/// Mean and quartiles of identical-twin similarity scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityBaseline<S> {
    pub mean: S,
    pub q1: S,
    pub q2: S,
    pub q3: S,
    /// Lower bound of the fourth quartile; equal to `q3`.
    pub q4_threshold: S,
    pub n: usize,
}

pub fn similarity_baseline<S: Scalar>(scores: &[S]) -> Result<SimilarityBaseline<S>> {
    if scores.len() < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            found: scores.len(),
        });
    }
    if scores.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation("baseline scores must be finite".into()));
    }
    let mut v = scores.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = v.iter().copied().sum::<S>() / S::from_count(v.len());
    // Keep the mean inside the data range under rounding.
    let mean = mean.max(v[0]).min(v[v.len() - 1]);
    let q3 = percentile(&v, S::lit(0.75));
    Ok(SimilarityBaseline {
        mean,
        q1: percentile(&v, S::lit(0.25)),
        q2: percentile(&v, S::lit(0.5)),
        q3,
        q4_threshold: q3,
        n: v.len(),
    })
}
