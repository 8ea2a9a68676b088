use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow<S> {
    pub threshold: S,
    /// Identities whose maximum unrelated score is `>= threshold`.
    pub count: usize,
    /// `count / identities`, 0 when there are none.
    pub fraction: S,
}

/// Look-alike frequency at each threshold, rows in ascending threshold order.
/// `maxima` holds one value per identity; `-inf` marks an identity with no
/// scored unrelated pairs. NaN thresholds are dropped.
pub fn lookalike_sweep<S: Scalar>(maxima: &[S], thresholds: &[S]) -> Vec<SweepRow<S>> {
    let mut sorted: Vec<S> = maxima.iter().copied().filter(|x| !x.is_nan()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut grid: Vec<S> = thresholds.iter().copied().filter(|t| !t.is_nan()).collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = maxima.len();
    grid.into_iter()
        .map(|t| {
            let count = sorted.len() - sorted.partition_point(|&x| x < t);
            SweepRow {
                threshold: t,
                count,
                fraction: if n == 0 {
                    S::zero()
                } else {
                    S::from_count(count) / S::from_count(n)
                },
            }
        })
        .collect()
}
