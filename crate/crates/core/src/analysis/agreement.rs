use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pearson correlation and least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport<S> {
    pub pearson_r: S,
    pub slope: S,
    pub intercept: S,
    pub n: usize,
}

fn mean<S: Scalar>(xs: impl Iterator<Item = S>, n: usize) -> S {
    xs.fold(S::zero(), |a, x| a + x) / S::from_count(n)
}

fn check_finite<S: Scalar>(points: &[(S, S)]) -> Result<()> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Validation("paired scores must be finite".into()));
    }
    Ok(())
}

/// Correlates `(x, y)` pairs, typically (comparison score, similarity score).
pub fn correlate<S: Scalar>(points: &[(S, S)]) -> Result<CorrelationReport<S>> {
    if points.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: points.len(),
        });
    }
    check_finite(points)?;
    let n = points.len();
    let mx = mean(points.iter().map(|p| p.0), n);
    let my = mean(points.iter().map(|p| p.1), n);
    let (mut sxx, mut syy, mut sxy) = (S::zero(), S::zero(), S::zero());
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
        sxy = sxy + dx * dy;
    }
    if sxx == S::zero() {
        return Err(Error::DegenerateVariance("x"));
    }
    if syy == S::zero() {
        return Err(Error::DegenerateVariance("y"));
    }
    let r = (sxy / (sxx * syy).sqrt()).max(-S::one()).min(S::one());
    let slope = sxy / sxx;
    Ok(CorrelationReport {
        pearson_r: r,
        slope,
        intercept: my - slope * mx,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `(x - min) / (max - min)`; a constant family maps to 0.
    #[default]
    MinMax,
    /// `(x - mean) / sd` with population sd.
    ZScore,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MinMax => "minmax",
            Self::ZScore => "zscore",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" => Ok(Self::MinMax),
            "zscore" => Ok(Self::ZScore),
            _ => Err(Error::Config(format!("unknown normalization {s:?}"))),
        }
    }
}

fn normalize<S: Scalar>(xs: &[S], mode: Normalization, which: &'static str) -> Result<Vec<S>> {
    match mode {
        Normalization::MinMax => {
            let lo = xs.iter().copied().fold(S::infinity(), S::min);
            let hi = xs.iter().copied().fold(S::neg_infinity(), S::max);
            let span = hi - lo;
            Ok(xs
                .iter()
                .map(|&x| if span == S::zero() { S::zero() } else { (x - lo) / span })
                .collect())
        }
        Normalization::ZScore => {
            let m = mean(xs.iter().copied(), xs.len());
            let sd = population_sd(xs, m);
            if sd == S::zero() || xs.iter().all(|&x| x == xs[0]) {
                return Err(Error::DegenerateVariance(which));
            }
            Ok(xs.iter().map(|&x| (x - m) / sd).collect())
        }
    }
}

fn population_sd<S: Scalar>(xs: &[S], m: S) -> S {
    let ss = xs.iter().fold(S::zero(), |a, &x| a + (x - m) * (x - m));
    (ss / S::from_count(xs.len())).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlandAltmanReport<S> {
    pub normalization: Normalization,
    /// Per pair `(mean, difference)` with difference = first - second.
    pub points: Vec<(S, S)>,
    pub mean_diff: S,
    /// Population standard deviation of the differences.
    pub sd_diff: S,
    pub loa_low: S,
    pub loa_high: S,
}

pub const LOA_Z: f64 = 1.96;

/// Agreement between two score families, each normalized independently.
pub fn bland_altman<S: Scalar>(points: &[(S, S)], normalization: Normalization) -> Result<BlandAltmanReport<S>> {
    if points.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: points.len(),
        });
    }
    check_finite(points)?;
    let first: Vec<S> = points.iter().map(|p| p.0).collect();
    let second: Vec<S> = points.iter().map(|p| p.1).collect();
    let u = normalize(&first, normalization, "first")?;
    let v = normalize(&second, normalization, "second")?;
    let half = S::lit(0.5);
    let pts: Vec<(S, S)> = u.iter().zip(&v).map(|(&a, &b)| ((a + b) * half, a - b)).collect();
    let diffs: Vec<S> = pts.iter().map(|p| p.1).collect();
    let mean_diff = mean(diffs.iter().copied(), diffs.len());
    let sd = population_sd(&diffs, mean_diff);
    let z = S::lit(LOA_Z);
    Ok(BlandAltmanReport {
        normalization,
        points: pts,
        mean_diff,
        sd_diff: sd,
        loa_low: mean_diff - z * sd,
        loa_high: mean_diff + z * sd,
    })
}
