//! Shared-weight projection head trained with a contrastive objective.
//!
//! Both Siamese branches call [`HeadParams::forward`] on the same parameter
//! set, so there is nothing to tie: gradients from the two branches land in
//! one [`HeadParams`]-shaped buffer.

mod io;
mod loss;
mod train;

pub use io::{read_head, write_head, HEAD_MAGIC};
pub use loss::{contrastive_loss, loss_gradient, Label, LossValue};
pub use train::{
    batch_gradient, train, write_history_csv, EpochRecord, Optimizer, TrainConfig, TrainData, TrainOutcome, TrainPair,
    HISTORY_HEADER,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Tanh),
            _ => None,
        }
    }

    fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output<S: Scalar>(self, y: S) -> S {
        match self {
            Activation::Identity => S::one(),
            Activation::Tanh => S::one() - y * y,
        }
    }
}

/// Dense affine map `y = W x + b`, `W` row-major `d_out x d_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<S> {
    d_in: usize,
    d_out: usize,
    weights: Vec<S>,
    bias: Vec<S>,
}

impl<S: Scalar> Layer<S> {
    pub fn new(d_in: usize, d_out: usize, weights: Vec<S>, bias: Vec<S>) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::Config("layer dimensions must be at least 1".into()));
        }
        if weights.len() != d_in * d_out {
            return Err(Error::DimensionMismatch {
                expected: d_in * d_out,
                found: weights.len(),
            });
        }
        if bias.len() != d_out {
            return Err(Error::DimensionMismatch {
                expected: d_out,
                found: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Validation("head parameters must be finite".into()));
        }
        Ok(Self {
            d_in,
            d_out,
            weights,
            bias,
        })
    }

    fn zeros(d_in: usize, d_out: usize) -> Self {
        Self {
            d_in,
            d_out,
            weights: vec![S::zero(); d_in * d_out],
            bias: vec![S::zero(); d_out],
        }
    }

    /// Truncated or zero-padded identity plus uniform noise in `[-noise, noise]`.
    fn near_identity(d_in: usize, d_out: usize, noise: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut layer = Self::zeros(d_in, d_out);
        for r in 0..d_out {
            for c in 0..d_in {
                let base = if r == c { 1.0 } else { 0.0 };
                let jitter = if noise > 0.0 {
                    rng.gen_range(-noise..=noise)
                } else {
                    0.0
                };
                layer.weights[r * d_in + c] = S::lit(base + jitter);
            }
        }
        layer
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn bias(&self) -> &[S] {
        &self.bias
    }

    fn apply(&self, x: &[S], out: &mut Vec<S>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.d_in)
                .zip(&self.bias)
                .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (&w, &xi)| acc + w * xi)),
        );
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Projection head: one affine layer, or affine -> activation -> affine.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams<S> {
    first: Layer<S>,
    second: Option<Layer<S>>,
    activation: Activation,
}

impl<S: Scalar> HeadParams<S> {
    pub fn linear(layer: Layer<S>) -> Self {
        Self {
            first: layer,
            second: None,
            activation: Activation::Identity,
        }
    }

    pub fn with_hidden(first: Layer<S>, second: Layer<S>, activation: Activation) -> Result<Self> {
        if first.d_out != second.d_in {
            return Err(Error::DimensionMismatch {
                expected: first.d_out,
                found: second.d_in,
            });
        }
        Ok(Self {
            first,
            second: Some(second),
            activation,
        })
    }

    /// Head that starts close to the raw embedding geometry: near-identity
    /// weights with seeded `±1e-3` jitter and zero biases.
    pub fn init_near_identity(
        d_in: usize,
        d_out: usize,
        hidden: Option<(usize, Activation)>,
        seed: u64,
    ) -> Result<Self> {
        if d_in == 0 || d_out == 0 || hidden.is_some_and(|(h, _)| h == 0) {
            return Err(Error::Config("head dimensions must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(match hidden {
            None => Self::linear(Layer::near_identity(d_in, d_out, 1e-3, &mut rng)),
            Some((h, activation)) => Self {
                first: Layer::near_identity(d_in, h, 1e-3, &mut rng),
                second: Some(Layer::near_identity(h, d_out, 1e-3, &mut rng)),
                activation,
            },
        })
    }

    pub fn d_in(&self) -> usize {
        self.first.d_in
    }

    pub fn d_out(&self) -> usize {
        self.second.as_ref().unwrap_or(&self.first).d_out
    }

    pub fn hidden_dim(&self) -> Option<usize> {
        self.second.as_ref().map(|_| self.first.d_out)
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer<S>> {
        std::iter::once(&self.first).chain(self.second.as_ref())
    }

    pub fn forward(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.d_in() {
            return Err(Error::DimensionMismatch {
                expected: self.d_in(),
                found: x.len(),
            });
        }
        Ok(self.trace(x).output)
    }

    fn trace(&self, x: &[S]) -> Trace<S> {
        let mut hidden = Vec::with_capacity(self.first.d_out);
        self.first.apply(x, &mut hidden);
        match &self.second {
            None => Trace {
                hidden: Vec::new(),
                output: hidden,
            },
            Some(second) => {
                for h in &mut hidden {
                    *h = self.activation.apply(*h);
                }
                let mut output = Vec::with_capacity(second.d_out);
                second.apply(&hidden, &mut output);
                Trace { hidden, output }
            }
        }
    }

    /// Accumulate `d loss / d params` for one branch given the output gradient.
    fn backprop_into(&self, x: &[S], trace: &Trace<S>, grad_out: &[S], grad: &mut HeadParams<S>) {
        let upstream: Vec<S> = match (&self.second, &mut grad.second) {
            (Some(second), Some(g2)) => {
                outer_add(&mut g2.weights, grad_out, &trace.hidden);
                add_into(&mut g2.bias, grad_out);
                (0..second.d_in)
                    .map(|c| {
                        let back = (0..second.d_out).fold(S::zero(), |acc, r| {
                            acc + second.weights[r * second.d_in + c] * grad_out[r]
                        });
                        back * self.activation.derivative_from_output(trace.hidden[c])
                    })
                    .collect()
            }
            _ => grad_out.to_vec(),
        };
        outer_add(&mut grad.first.weights, &upstream, x);
        add_into(&mut grad.first.bias, &upstream);
    }

    /// All-zero parameters with the same shape; used as a gradient buffer.
    pub fn zeros_like(&self) -> Self {
        Self {
            first: Layer::zeros(self.first.d_in, self.first.d_out),
            second: self.second.as_ref().map(|l| Layer::zeros(l.d_in, l.d_out)),
            activation: self.activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(Layer::param_count).sum()
    }

    /// Parameters in storage order: `W1, b1[, W2, b2]`.
    pub fn to_flat(&self) -> Vec<S> {
        self.layers()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_flat(&mut self, flat: &[S]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                found: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        for layer in std::iter::once(&mut self.first).chain(self.second.as_mut()) {
            for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *v = it.next().unwrap();
            }
        }
        Ok(())
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut S> {
        std::iter::once(&mut self.first)
            .chain(self.second.as_mut())
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    /// `self += alpha * other`; shapes must match.
    pub fn axpy(&mut self, alpha: S, other: &Self) {
        let src = other.to_flat();
        for (dst, s) in self.params_mut().zip(src) {
            *dst = *dst + alpha * s;
        }
    }

    pub fn scale(&mut self, alpha: S) {
        for v in self.params_mut() {
            *v = *v * alpha;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> S {
        self.layers()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .fold(S::zero(), |m, v| m.max(v.abs()))
    }

    /// Convert between scalar precisions.
    pub fn cast<T: Scalar>(&self) -> HeadParams<T> {
        let conv = |l: &Layer<S>| Layer {
            d_in: l.d_in,
            d_out: l.d_out,
            weights: l.weights.iter().map(|v| T::lit(v.as_f64())).collect(),
            bias: l.bias.iter().map(|v| T::lit(v.as_f64())).collect(),
        };
        HeadParams {
            first: conv(&self.first),
            second: self.second.as_ref().map(conv),
            activation: self.activation,
        }
    }
}

struct Trace<S> {
    hidden: Vec<S>,
    output: Vec<S>,
}

fn outer_add<S: Scalar>(dst: &mut [S], col: &[S], row: &[S]) {
    for (r, &c) in col.iter().enumerate() {
        for (d, &x) in dst[r * row.len()..(r + 1) * row.len()].iter_mut().zip(row) {
            *d = *d + c * x;
        }
    }
}

fn add_into<S: Scalar>(dst: &mut [S], src: &[S]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = *d + s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(w: &[f64], b: &[f64], d_in: usize) -> HeadParams<f64> {
        HeadParams::linear(Layer::new(d_in, b.len(), w.to_vec(), b.to_vec()).unwrap())
    }

    #[test]
    fn identity_head_is_identity() {
        let h = linear(&[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], 2);
        assert_eq!(h.forward(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn zero_weights_give_bias() {
        let h = linear(&[0.0, 0.0], &[3.0], 2);
        assert_eq!(h.forward(&[7.0, -4.0]).unwrap(), vec![3.0]);
    }

    #[test]
    fn scaling_head() {
        let h = linear(&[2.0, 0.0, 0.0, 2.0], &[0.0, 0.0], 2);
        assert_eq!(h.forward(&[1.0, 1.0]).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let h = linear(&[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], 2);
        assert!(matches!(
            h.forward(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn non_finite_parameters_rejected() {
        assert!(Layer::new(1, 1, vec![f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn hidden_identity_head_is_identity() {
        let h = HeadParams::<f64>::with_hidden(
            Layer::new(2, 3, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0], vec![0.0; 3]).unwrap(),
            Layer::new(3, 2, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0], vec![0.0; 2]).unwrap(),
            Activation::Identity,
        )
        .unwrap();
        assert_eq!(h.forward(&[1.5, -2.0]).unwrap(), vec![1.5, -2.0]);
    }

    #[test]
    fn init_is_near_identity_and_seeded() {
        let a = HeadParams::<f64>::init_near_identity(4, 3, None, 9).unwrap();
        let b = HeadParams::<f64>::init_near_identity(4, 3, None, 9).unwrap();
        assert_eq!(a, b);
        let w = a.layers().next().unwrap().weights();
        for r in 0..3 {
            for c in 0..4 {
                let target = if r == c { 1.0 } else { 0.0 };
                assert!((w[r * 4 + c] - target).abs() <= 1e-3);
            }
        }
        assert!(a.layers().next().unwrap().bias().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn flat_round_trip_and_f32_cast() {
        let mut h = HeadParams::<f64>::init_near_identity(3, 2, Some((4, Activation::Tanh)), 1).unwrap();
        let flat: Vec<f64> = (0..h.param_count()).map(|i| i as f64 * 0.01).collect();
        h.set_flat(&flat).unwrap();
        assert_eq!(h.to_flat(), flat);
        let h32: HeadParams<f32> = h.cast();
        let y64 = h.forward(&[0.1, 0.2, 0.3]).unwrap();
        let y32 = h32.forward(&[0.1, 0.2, 0.3]).unwrap();
        for (a, b) in y64.iter().zip(&y32) {
            assert!((a - f64::from(*b)).abs() < 1e-5);
        }
    }
}
