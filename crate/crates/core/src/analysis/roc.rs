use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Operating point at one decision threshold. A pair is accepted as a match
/// when `score >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint<S> {
    pub threshold: S,
    pub fmr: S,
    pub fnmr: S,
}

/// ROC swept over every distinct observed score, in ascending threshold
/// order, closed by a `+inf` threshold. The first point is `(FMR 1, FNMR 0)`
/// and the last `(FMR 0, FNMR 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve<S> {
    pub points: Vec<RocPoint<S>>,
    pub genuine_count: usize,
    pub impostor_count: usize,
}

fn sorted<S: Scalar>(xs: &[S], what: &'static str) -> Result<Vec<S>> {
    if xs.is_empty() {
        return Err(Error::EmptyClass(what));
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::Validation(format!("{what} scores contain NaN")));
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(v)
}

fn count_below<S: Scalar>(sorted: &[S], t: S) -> usize {
    sorted.partition_point(|&x| x < t)
}

pub fn roc<S: Scalar>(genuine: &[S], impostor: &[S]) -> Result<RocCurve<S>> {
    let g = sorted(genuine, "genuine")?;
    let im = sorted(impostor, "impostor")?;
    let mut thresholds: Vec<S> = g.iter().chain(&im).copied().collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    thresholds.push(S::infinity());
    let (ng, ni) = (S::from_count(g.len()), S::from_count(im.len()));
    let points = thresholds
        .into_iter()
        .map(|t| RocPoint {
            threshold: t,
            fmr: S::from_count(im.len() - count_below(&im, t)) / ni,
            fnmr: S::from_count(count_below(&g, t)) / ng,
        })
        .collect();
    Ok(RocCurve {
        points,
        genuine_count: g.len(),
        impostor_count: im.len(),
    })
}

impl<S: Scalar> RocCurve<S> {
    /// Trapezoidal area under TPR (= 1 - FNMR) against FMR.
    pub fn auc_trapezoid(&self) -> S {
        let half = S::lit(0.5);
        self.points.windows(2).fold(S::zero(), |acc, w| {
            let (p, q) = (w[0], w[1]);
            acc + (p.fmr - q.fmr) * ((S::one() - p.fnmr) + (S::one() - q.fnmr)) * half
        })
    }
}

/// Probability that a random genuine score beats a random impostor score,
/// ties counting one half. Computed with exact integer counts.
pub fn mann_whitney_auc<S: Scalar>(genuine: &[S], impostor: &[S]) -> Result<S> {
    let g = sorted(genuine, "genuine")?;
    let im = sorted(impostor, "impostor")?;
    // Twice the U statistic: 2 per win, 1 per tie.
    let mut twice_u: u128 = 0;
    let (mut lo, mut hi) = (0usize, 0usize);
    for &x in &g {
        while lo < im.len() && im[lo] < x {
            lo += 1;
        }
        hi = hi.max(lo);
        while hi < im.len() && im[hi] <= x {
            hi += 1;
        }
        twice_u += 2 * lo as u128 + (hi - lo) as u128;
    }
    let denom = 2 * g.len() as u128 * im.len() as u128;
    Ok(S::lit(twice_u as f64 / denom as f64))
}

/// Equal error rate located by linear interpolation between the two
/// consecutive ROC points where `FMR - FNMR` changes sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerPoint<S> {
    pub eer: S,
    pub threshold: S,
    /// Index `k` of the bracketing points `k` and `k + 1`.
    pub bracket: usize,
}

pub fn eer<S: Scalar>(curve: &RocCurve<S>) -> EerPoint<S> {
    let pts = &curve.points;
    let diff = |p: &RocPoint<S>| p.fmr - p.fnmr;
    // diff starts at +1 and ends at -1, so a sign change always exists.
    let k = pts
        .windows(2)
        .position(|w| diff(&w[0]) >= S::zero() && diff(&w[1]) <= S::zero())
        .expect("ROC endpoints bracket the EER");
    let (p, q) = (pts[k], pts[k + 1]);
    let (dp, dq) = (diff(&p), diff(&q));
    let alpha = if dp == dq { S::zero() } else { dp / (dp - dq) };
    let eer = p.fmr + alpha * (q.fmr - p.fmr);
    let threshold = if q.threshold.is_finite() {
        p.threshold + alpha * (q.threshold - p.threshold)
    } else {
        p.threshold
    };
    EerPoint {
        eer,
        threshold,
        bracket: k,
    }
}

/// FNMR interpolated at a target FMR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnmrAtFmr<S> {
    pub fmr_target: S,
    /// FMR at which `fnmr` was evaluated: the target when reachable,
    /// otherwise the floor `1 / impostor_count`.
    pub fmr_evaluated: S,
    pub fnmr: S,
    pub reachable: bool,
}

fn interpolate_fnmr<S: Scalar>(curve: &RocCurve<S>, target: S) -> S {
    let pts = &curve.points;
    let k = pts
        .iter()
        .position(|p| p.fmr <= target)
        .expect("last ROC point has FMR 0");
    let q = pts[k];
    if k == 0 || q.fmr == target {
        return q.fnmr;
    }
    let p = pts[k - 1];
    let alpha = (p.fmr - target) / (p.fmr - q.fmr);
    p.fnmr + alpha * (q.fnmr - p.fnmr)
}

fn reachable<S: Scalar>(curve: &RocCurve<S>, target: S) -> bool {
    // Resolving FMR = target needs at least 1 / target impostor comparisons.
    S::from_count(curve.impostor_count) * target >= S::one() - S::epsilon()
}

/// FNMR at `target`; when too few impostors exist to resolve it, evaluates at
/// the achievable floor `1 / impostor_count` and flags the result.
pub fn fnmr_at_fmr<S: Scalar>(curve: &RocCurve<S>, target: S) -> FnmrAtFmr<S> {
    let ok = reachable(curve, target);
    let at = if ok {
        target
    } else {
        S::one() / S::from_count(curve.impostor_count)
    };
    FnmrAtFmr {
        fmr_target: target,
        fmr_evaluated: at,
        fnmr: interpolate_fnmr(curve, at),
        reachable: ok,
    }
}

/// Like [`fnmr_at_fmr`] but fails with [`Error::UnreachableFmr`] instead of
/// falling back to the floor.
pub fn fnmr_at_fmr_strict<S: Scalar>(curve: &RocCurve<S>, target: S) -> Result<S> {
    let r = fnmr_at_fmr(curve, target);
    if r.reachable {
        Ok(r.fnmr)
    } else {
        Err(Error::UnreachableFmr {
            target: target.as_f64(),
            impostors: curve.impostor_count,
            floor: r.fmr_evaluated.as_f64(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationMetrics<S> {
    pub auc: S,
    pub eer: EerPoint<S>,
    pub fnmr_at_fmr: FnmrAtFmr<S>,
}

pub fn verification_metrics<S: Scalar>(
    curve: &RocCurve<S>,
    genuine: &[S],
    impostor: &[S],
    fmr_target: S,
) -> Result<VerificationMetrics<S>> {
    if !(fmr_target > S::zero() && fmr_target < S::one()) {
        return Err(Error::Config("fmr_target must lie in (0, 1)".into()));
    }
    if genuine.len() != curve.genuine_count || impostor.len() != curve.impostor_count {
        return Err(Error::Validation("score lists do not match the ROC curve".into()));
    }
    Ok(VerificationMetrics {
        auc: mann_whitney_auc(genuine, impostor)?,
        eer: eer(curve),
        fnmr_at_fmr: fnmr_at_fmr(curve, fmr_target),
    })
}
