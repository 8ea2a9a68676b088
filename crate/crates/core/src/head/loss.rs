use super::HeadParams;
use crate::error::{Error, Result};
use crate::scalar::{l2_distance, Scalar};

/// Training label. `Similar` is y = 0 (identical-twin pair), `Dissimilar` is
/// y = 1 (look-alike pair).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Similar,
    Dissimilar,
}

impl Label {
    pub fn y(self) -> u8 {
        match self {
            Label::Similar => 0,
            Label::Dissimilar => 1,
        }
    }

    pub fn from_y(y: u8) -> Option<Self> {
        match y {
            0 => Some(Label::Similar),
            1 => Some(Label::Dissimilar),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue<S> {
    pub value: S,
    pub distance: S,
}

/// `(1 - y) D^2 + y max(0, m - D)^2` with `D = |p1 - p2|`.
pub fn contrastive_loss<S: Scalar>(p1: &[S], p2: &[S], label: Label, margin: S) -> LossValue<S> {
    let d = l2_distance(p1, p2);
    let value = match label {
        Label::Similar => d * d,
        Label::Dissimilar => {
            let slack = (margin - d).max(S::zero());
            slack * slack
        }
    };
    LossValue { value, distance: d }
}

/// Loss and its gradient with respect to every head parameter, summed over
/// both branches. The subgradient at `D = 0` and at `D = m` is zero.
pub fn loss_gradient<S: Scalar>(
    params: &HeadParams<S>,
    x1: &[S],
    x2: &[S],
    label: Label,
    margin: S,
) -> Result<(LossValue<S>, HeadParams<S>)> {
    for x in [x1, x2] {
        if x.len() != params.d_in() {
            return Err(Error::DimensionMismatch {
                expected: params.d_in(),
                found: x.len(),
            });
        }
    }
    let t1 = params.trace(x1);
    let t2 = params.trace(x2);
    let loss = contrastive_loss(&t1.output, &t2.output, label, margin);
    let mut grad = params.zeros_like();

    let d = loss.distance;
    // d loss / d p1 = coeff * (p1 - p2); d loss / d p2 is its negation.
    let two = S::lit(2.0);
    let coeff = match label {
        Label::Similar => two,
        Label::Dissimilar if d > S::zero() && d < margin => -two * (margin - d) / d,
        Label::Dissimilar => S::zero(),
    };
    if coeff == S::zero() || d == S::zero() {
        return Ok((loss, grad));
    }
    let g1: Vec<S> = t1
        .output
        .iter()
        .zip(&t2.output)
        .map(|(&a, &b)| coeff * (a - b))
        .collect();
    let g2: Vec<S> = g1.iter().map(|&g| -g).collect();
    params.backprop_into(x1, &t1, &g1, &mut grad);
    params.backprop_into(x2, &t2, &g2, &mut grad);
    Ok((loss, grad))
}
