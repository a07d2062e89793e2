use alloc::vec::Vec;

use thiserror::Error;

use super::{softmax_cross_entropy, Adam, Mode, Model, NnError, Tensor};
use crate::dataset::{BalancedBatches, DatasetError, Manifest, ManifestEntry};
use crate::rng::{self, Rng};

/// Supplies model inputs for manifest entries.
pub trait FeatureSource {
    type Error;
    /// Training example, possibly augmented with draws from `rng`.
    fn train_features(&mut self, entry: &ManifestEntry, rng: &mut Rng) -> Result<Vec<f32>, Self::Error>;
    /// Deterministic example for evaluation.
    fn eval_features(&mut self, entry: &ManifestEntry) -> Result<Vec<f32>, Self::Error>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Multiple of 12.
    pub batch_size: usize,
    /// Defaults to `ceil(training entries / batch_size)`.
    pub batches_per_epoch: Option<usize>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    /// Measure accuracy on the training entries after every epoch.
    pub eval_train_accuracy: bool,
    /// Stop once training accuracy reaches this value (needs
    /// `eval_train_accuracy`).
    pub stop_at_train_accuracy: Option<f32>,
    /// Restore the epoch with the best held-out accuracy at the end.
    pub keep_best: bool,
    pub eval_batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 24,
            batches_per_epoch: None,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            eval_train_accuracy: false,
            stop_at_train_accuracy: None,
            keep_best: true,
            eval_batch: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f32,
    pub train_accuracy: Option<f32>,
    pub heldout_accuracy: Option<f32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochMetrics>,
    /// Epoch whose parameters were kept, when `keep_best` applied.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
    pub steps: usize,
}

#[derive(Debug, Error)]
pub enum TrainError<E> {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("feature extraction failed: {0}")]
    Features(E),
    #[error("loss diverged (non-finite) at epoch {epoch}, step {step}")]
    DivergedLoss { epoch: usize, step: usize },
}

fn batch_tensor<E>(model: &Model<f32>, examples: &[Vec<f32>]) -> Result<Tensor<f32>, TrainError<E>> {
    let refs: Vec<&[f32]> = examples.iter().map(Vec::as_slice).collect();
    Ok(Tensor::stack(model.input_shape(), &refs)?)
}

/// Eval-mode accuracy of `model` over `entries`.
pub fn evaluate_accuracy<S: FeatureSource>(
    model: &mut Model<f32>,
    entries: &[&ManifestEntry],
    source: &mut S,
    chunk: usize,
) -> Result<f32, TrainError<S::Error>> {
    if entries.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for group in entries.chunks(chunk.max(1)) {
        let feats = group
            .iter()
            .map(|e| source.eval_features(e))
            .collect::<Result<Vec<_>, _>>()
            .map_err(TrainError::Features)?;
        let logits = model.forward(&batch_tensor(model, &feats)?, Mode::Eval)?;
        for (row, e) in logits.data.chunks_exact(logits.shape[1]).zip(group) {
            if argmax(row) == e.class.index() {
                correct += 1;
            }
        }
    }
    Ok(correct as f32 / entries.len() as f32)
}

pub(crate) fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Adam on class-balanced batches from every fold except `fold_out`.
///
/// Random streams: stream 0 of `seed` orders batches, stream 1 drives
/// augmentation. Dropout masks come from the model's own streams.
pub fn train<S: FeatureSource>(
    model: &mut Model<f32>,
    manifest: &Manifest,
    fold_out: Option<i32>,
    source: &mut S,
    config: &TrainConfig,
) -> Result<TrainReport, TrainError<S::Error>> {
    let mut batches = BalancedBatches::new(manifest, fold_out, config.batch_size, rng::stream(config.seed, 0))?;
    let mut aug_rng = rng::stream(config.seed, 1);
    let train_entries: Vec<&ManifestEntry> =
        manifest.entries.iter().filter(|e| Some(e.fold) != fold_out).collect();
    let heldout: Vec<&ManifestEntry> = match fold_out {
        Some(f) => manifest.entries.iter().filter(|e| e.fold == f).collect(),
        None => Vec::new(),
    };
    let per_epoch = config
        .batches_per_epoch
        .unwrap_or_else(|| train_entries.len().div_ceil(config.batch_size))
        .max(1);
    let mut opt = Adam::new(config.lr, config.beta1, config.beta2, config.eps);
    let mut report = TrainReport::default();
    let mut best: Option<(f32, Vec<Tensor<f32>>)> = None;

    for epoch in 0..config.epochs {
        let mut loss_sum = 0.0f64;
        for step in 0..per_epoch {
            let idx = batches.next_indices();
            let mut feats = Vec::with_capacity(idx.len());
            let mut targets = Vec::with_capacity(idx.len());
            for &i in &idx {
                let e = &manifest.entries[i];
                feats.push(source.train_features(e, &mut aug_rng).map_err(TrainError::Features)?);
                targets.push(e.class.index());
            }
            let x = batch_tensor(model, &feats)?;
            let logits = model.forward(&x, Mode::Train)?;
            let (loss, grad) = softmax_cross_entropy(&logits, &targets)?;
            if !loss.is_finite() {
                return Err(TrainError::DivergedLoss { epoch, step });
            }
            model.zero_grad();
            model.backward(&grad)?;
            opt.step(model.params_mut());
            loss_sum += loss as f64;
            report.steps += 1;
        }
        let train_accuracy = if config.eval_train_accuracy {
            Some(evaluate_accuracy(model, &train_entries, source, config.eval_batch)?)
        } else {
            None
        };
        let heldout_accuracy = if heldout.is_empty() {
            None
        } else {
            Some(evaluate_accuracy(model, &heldout, source, config.eval_batch)?)
        };
        report.epochs.push(EpochMetrics {
            epoch,
            train_loss: (loss_sum / per_epoch as f64) as f32,
            train_accuracy,
            heldout_accuracy,
        });
        if config.keep_best {
            if let Some(acc) = heldout_accuracy {
                if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                    best = Some((acc, model.snapshot()));
                    report.best_epoch = Some(epoch);
                }
            }
        }
        if let (Some(target), Some(acc)) = (config.stop_at_train_accuracy, train_accuracy) {
            if acc >= target {
                report.stopped_early = epoch + 1 < config.epochs;
                break;
            }
        }
    }
    if let Some((_, state)) = best {
        model.load_state(&state)?;
    }
    Ok(report)
}
