use super::loss::{loss_gradient, Label};
use super::HeadParams;
use crate::analysis::mann_whitney_auc;
use crate::datamodel::{csv_result, Dataset};
use crate::error::{Error, Result};
use crate::pairing::{BalancedSampler, PairSpec};
use crate::scalar::{l2_distance, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd,
    Momentum(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub margin: f64,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            margin: 0.5,
            epochs: 4,
            steps_per_epoch: 200,
            batch_size: 32,
            seed: 0,
            optimizer: Optimizer::Sgd,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a positive finite number");
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad("margin must be a positive finite number");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.steps_per_epoch == 0 {
            return bad("steps_per_epoch must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if let Optimizer::Momentum(beta) = self.optimizer {
            if !(0.0..1.0).contains(&beta) {
                return bad("momentum must lie in [0, 1)");
            }
        }
        Ok(())
    }
}

/// An index-resolved training pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainPair {
    pub a: usize,
    pub b: usize,
    pub label: Label,
}

impl TrainPair {
    /// Resolve image ids against a dataset; every spec must carry a label.
    pub fn resolve(specs: &[PairSpec], ds: &Dataset) -> Result<Vec<TrainPair>> {
        specs
            .iter()
            .map(|p| {
                let idx = |id| {
                    ds.image_index(id)
                        .ok_or_else(|| Error::Join(format!("pair references unknown image `{id}`")))
                };
                let label = p
                    .label
                    .ok_or_else(|| Error::Validation(format!("pair {}/{} has no label", p.a, p.b)))?;
                Ok(TrainPair {
                    a: idx(&p.a)?,
                    b: idx(&p.b)?,
                    label,
                })
            })
            .collect()
    }
}

/// Row-major embedding matrix in the training precision.
#[derive(Debug, Clone)]
pub struct TrainData<S> {
    dim: usize,
    vectors: Vec<S>,
}

impl<S: Scalar> TrainData<S> {
    pub fn from_dataset(ds: &Dataset) -> Self {
        let vectors = (0..ds.image_count())
            .flat_map(|i| ds.vector(i).iter().map(|&v| S::lit(v)))
            .collect();
        Self { dim: ds.dim(), vectors }
    }

    pub fn from_rows(dim: usize, vectors: Vec<S>) -> Result<Self> {
        if dim == 0 || !vectors.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: vectors.len(),
            });
        }
        Ok(Self { dim, vectors })
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub val_auc: Option<f64>,
}

pub const HISTORY_HEADER: [&str; 3] = ["epoch", "mean_loss", "val_auc"];

pub fn write_history_csv(history: &[EpochRecord], w: impl std::io::Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    csv_result(out.write_record(HISTORY_HEADER))?;
    for r in history {
        let auc = r.val_auc.map(|a| a.to_string()).unwrap_or_default();
        csv_result(out.write_record([r.epoch.to_string(), r.mean_loss.to_string(), auc]))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<S> {
    pub params: HeadParams<S>,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

const LEAF: usize = 8;

fn tree_sum<S: Scalar>(
    params: &HeadParams<S>,
    data: &TrainData<S>,
    pairs: &[TrainPair],
    margin: S,
) -> Result<(S, HeadParams<S>)> {
    if pairs.len() <= LEAF {
        let mut grad = params.zeros_like();
        let mut loss = S::zero();
        for p in pairs {
            let (l, g) = loss_gradient(params, data.row(p.a), data.row(p.b), p.label, margin)?;
            loss = loss + l.value;
            grad.axpy(S::one(), &g);
        }
        return Ok((loss, grad));
    }
    let (left, right) = pairs.split_at(pairs.len() / 2);
    let (l, r) = rayon::join(
        || tree_sum(params, data, left, margin),
        || tree_sum(params, data, right, margin),
    );
    let (loss_l, mut grad) = l?;
    let (loss_r, grad_r) = r?;
    grad.axpy(S::one(), &grad_r);
    Ok((loss_l + loss_r, grad))
}

/// Mean loss and mean gradient over `pairs`.
///
/// Per-pair terms are combined by a fixed pairwise tree, so the result is the
/// same bits whatever the size of the rayon pool.
pub fn batch_gradient<S: Scalar>(
    params: &HeadParams<S>,
    data: &TrainData<S>,
    pairs: &[TrainPair],
    margin: S,
) -> Result<(S, HeadParams<S>)> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (loss, mut grad) = tree_sum(params, data, pairs, margin)?;
    let inv = S::one() / S::from_count(pairs.len());
    grad.scale(inv);
    Ok((loss * inv, grad))
}

/// Held-out verification AUC with `-distance` as the match score.
fn verification_auc<S: Scalar>(
    params: &HeadParams<S>,
    data: &TrainData<S>,
    pairs: &[TrainPair],
) -> Result<Option<f64>> {
    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for p in pairs {
        let a = params.forward(data.row(p.a))?;
        let b = params.forward(data.row(p.b))?;
        let score = -l2_distance(&a, &b);
        match p.label {
            Label::Similar => genuine.push(score),
            Label::Dissimilar => impostor.push(score),
        }
    }
    if genuine.is_empty() || impostor.is_empty() {
        return Ok(None);
    }
    Ok(Some(mann_whitney_auc(&genuine, &impostor)?.as_f64()))
}

/// Train the head with balanced sampling and keep the best held-out epoch.
///
/// Each epoch runs `steps_per_epoch` mini-batch updates. After every epoch the
/// verification AUC on `val` is recorded; the returned parameters are those of
/// the epoch with the highest AUC (earliest wins ties). Without a usable
/// validation set the last epoch is returned.
pub fn train<S: Scalar>(
    init: HeadParams<S>,
    data: &TrainData<S>,
    train_pairs: &[TrainPair],
    val_pairs: &[TrainPair],
    config: &TrainConfig,
) -> Result<TrainOutcome<S>> {
    config.validate()?;
    if init.d_in() != data.dim {
        return Err(Error::DimensionMismatch {
            expected: init.d_in(),
            found: data.dim,
        });
    }
    let (pos, neg): (Vec<TrainPair>, Vec<TrainPair>) = train_pairs.iter().partition(|p| p.label == Label::Similar);
    let mut sampler = BalancedSampler::from_pools(pos, neg, config.seed)?;

    let lr = S::lit(config.learning_rate);
    let margin = S::lit(config.margin);
    let mut params = init;
    let mut velocity = params.zeros_like();
    let mut best: Option<(f64, usize, HeadParams<S>)> = None;
    let mut history = Vec::with_capacity(config.epochs);
    let mut batch = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.epochs {
        let mut loss_sum = 0.0;
        for step in 0..config.steps_per_epoch {
            batch.clear();
            batch.extend(sampler.by_ref().take(config.batch_size));
            let (loss, grad) = batch_gradient(&params, data, &batch, margin)?;
            if !loss.is_finite() || !grad.is_finite() {
                return Err(Error::Divergence { epoch, step });
            }
            loss_sum += loss.as_f64();
            match config.optimizer {
                Optimizer::Sgd => params.axpy(-lr, &grad),
                Optimizer::Momentum(beta) => {
                    velocity.scale(S::lit(beta));
                    velocity.axpy(S::one(), &grad);
                    params.axpy(-lr, &velocity);
                }
            }
            if !params.is_finite() {
                return Err(Error::Divergence { epoch, step });
            }
        }
        let val_auc = verification_auc(&params, data, val_pairs)?;
        history.push(EpochRecord {
            epoch,
            mean_loss: loss_sum / config.steps_per_epoch as f64,
            val_auc,
        });
        let auc = val_auc.unwrap_or(f64::NEG_INFINITY);
        let improves = match &best {
            None => true,
            Some((b, _, _)) => val_auc.is_none() || auc > *b,
        };
        if improves {
            best = Some((auc, epoch, params.clone()));
        }
    }
    let (_, best_epoch, params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        params,
        best_epoch,
        history,
    })
}
