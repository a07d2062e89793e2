//! Predictions, ensembling and metrics.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::dataset::{ClassLabel, NUM_CLASSES};
use crate::nn::{softmax_rows, Mode, Model, NnError, Tensor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("ensemble has no members")]
    EmptyEnsemble,
    #[error("class index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("probabilities must be 12 finite non-negative values")]
    InvalidProbabilities,
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// A 12-way class distribution from one model (or an ensemble).
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probs: [f32; NUM_CLASSES],
    pub argmax: usize,
    pub source_model: String,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl Prediction {
    pub fn new(probs: [f32; NUM_CLASSES], source_model: impl Into<String>) -> Result<Self, EvalError> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(EvalError::InvalidProbabilities);
        }
        Ok(Prediction {
            argmax: argmax(&probs),
            probs,
            source_model: source_model.into(),
        })
    }

    pub fn from_slice(probs: &[f32], source_model: impl Into<String>) -> Result<Self, EvalError> {
        let arr: [f32; NUM_CLASSES] = probs.try_into().map_err(|_| EvalError::InvalidProbabilities)?;
        Prediction::new(arr, source_model)
    }

    pub fn label(&self) -> ClassLabel {
        ClassLabel::ALL[self.argmax]
    }
}

/// Eval-mode forward plus softmax for a single example.
pub fn predict(model: &mut Model<f32>, features: &[f32], source_model: &str) -> Result<Prediction, EvalError> {
    Ok(predict_batch(model, &[features], source_model)?.remove(0))
}

pub fn predict_batch(
    model: &mut Model<f32>,
    examples: &[&[f32]],
    source_model: &str,
) -> Result<Vec<Prediction>, EvalError> {
    let x = Tensor::stack(model.input_shape(), examples)?;
    let probs = softmax_rows(&model.forward(&x, Mode::Eval)?)?;
    probs
        .data
        .chunks_exact(NUM_CLASSES)
        .map(|row| Prediction::from_slice(row, source_model))
        .collect()
}

/// Arithmetic mean of member distributions. Members are summed in
/// `source_model` order so the result does not depend on the input order.
pub fn ensemble_mean(predictions: &[Prediction]) -> Result<Prediction, EvalError> {
    if predictions.is_empty() {
        return Err(EvalError::EmptyEnsemble);
    }
    let mut order: Vec<&Prediction> = predictions.iter().collect();
    order.sort_by(|a, b| a.source_model.cmp(&b.source_model));
    let mut acc = [0.0f64; NUM_CLASSES];
    for p in &order {
        for (a, &v) in acc.iter_mut().zip(&p.probs) {
            *a += v as f64;
        }
    }
    let n = predictions.len() as f64;
    let mut probs = [0.0f32; NUM_CLASSES];
    for (p, a) in probs.iter_mut().zip(acc) {
        *p = (a / n) as f32;
    }
    let names: Vec<&str> = order.iter().map(|p| p.source_model.as_str()).collect();
    Prediction::new(probs, names.join("+"))
}

/// Most frequent argmax; ties go to the larger summed probability, then the
/// lower index.
pub fn majority_vote(predictions: &[Prediction]) -> Result<usize, EvalError> {
    if predictions.is_empty() {
        return Err(EvalError::EmptyEnsemble);
    }
    let mut votes = [0usize; NUM_CLASSES];
    let mut mass = [0.0f64; NUM_CLASSES];
    for p in predictions {
        votes[p.argmax] += 1;
        for (m, &v) in mass.iter_mut().zip(&p.probs) {
            *m += v as f64;
        }
    }
    let mut best = 0;
    for c in 1..NUM_CLASSES {
        if votes[c] > votes[best] || (votes[c] == votes[best] && mass[c] > mass[best]) {
            best = c;
        }
    }
    Ok(best)
}

/// Redirects a low-confidence `unknown` argmax to the runner-up class.
pub fn apply_unknown_threshold(pred: &Prediction, tau: f32) -> usize {
    let unknown = ClassLabel::Unknown.index();
    if pred.argmax != unknown || pred.probs[unknown] >= tau {
        return pred.argmax;
    }
    let mut best: Option<usize> = None;
    for c in 0..NUM_CLASSES {
        if c != unknown && best.is_none_or(|b| pred.probs[c] > pred.probs[b]) {
            best = Some(c);
        }
    }
    best.unwrap_or(unknown)
}

/// `counts[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u32; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u32 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u32 {
        (0..NUM_CLASSES).map(|c| self.counts[c][c]).sum()
    }

    /// Trace over total; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.correct() as f64 / total as f64
        }
    }

    pub fn row_total(&self, class: usize) -> u32 {
        self.counts[class].iter().sum()
    }
}

pub fn confusion_matrix(pairs: &[(usize, usize)]) -> Result<ConfusionMatrix, EvalError> {
    let mut m = ConfusionMatrix::default();
    for &(t, p) in pairs {
        if t >= NUM_CLASSES {
            return Err(EvalError::IndexOutOfRange(t));
        }
        if p >= NUM_CLASSES {
            return Err(EvalError::IndexOutOfRange(p));
        }
        m.counts[t][p] += 1;
    }
    Ok(m)
}

pub fn accuracy(pairs: &[(usize, usize)]) -> Result<f64, EvalError> {
    Ok(confusion_matrix(pairs)?.accuracy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn onehot(c: usize, name: &str) -> Prediction {
        let mut p = [0.0; NUM_CLASSES];
        p[c] = 1.0;
        Prediction::new(p, name).unwrap()
    }

    #[test]
    fn mean_examples() {
        let single = onehot(3, "a");
        assert_eq!(ensemble_mean(&[single.clone()]).unwrap().probs, single.probs);
        let m = ensemble_mean(&[onehot(0, "a"), onehot(1, "b")]).unwrap();
        let mut want = [0.0; NUM_CLASSES];
        want[0] = 0.5;
        want[1] = 0.5;
        assert_eq!(m.probs, want);
        assert_eq!(m.argmax, 0);
        assert_eq!(ensemble_mean(&[]), Err(EvalError::EmptyEnsemble));
    }

    #[test]
    fn votes() {
        let down = ClassLabel::Down.index();
        let up = ClassLabel::Up.index();
        assert_eq!(majority_vote(&[onehot(down, "a"), onehot(down, "b"), onehot(up, "c")]).unwrap(), down);
        assert_eq!(majority_vote(&[onehot(up, "a")]).unwrap(), up);
        let mut pu = [0.0; NUM_CLASSES];
        pu[up] = 0.9;
        pu[down] = 0.1;
        let mut pd = [0.0; NUM_CLASSES];
        pd[down] = 0.8;
        pd[up] = 0.2;
        let tie = [Prediction::new(pu, "a").unwrap(), Prediction::new(pd, "b").unwrap()];
        // up: 1 vote, mass 1.1; down: 1 vote, mass 0.9
        assert_eq!(majority_vote(&tie).unwrap(), up);
        assert_eq!(majority_vote(&[]), Err(EvalError::EmptyEnsemble));
    }

    #[test]
    fn unknown_threshold() {
        let unknown = ClassLabel::Unknown.index();
        let down = ClassLabel::Down.index();
        let mut p = [0.0; NUM_CLASSES];
        p[unknown] = 0.3;
        p[down] = 0.28;
        let rest = (1.0 - 0.58) / 10.0;
        for (c, v) in p.iter_mut().enumerate() {
            if c != unknown && c != down {
                *v = rest;
            }
        }
        let pred = Prediction::new(p, "m").unwrap();
        assert_eq!(pred.argmax, unknown);
        assert_eq!(apply_unknown_threshold(&pred, 0.4), down);
        assert_eq!(apply_unknown_threshold(&pred, 0.0), unknown);
        assert_eq!(apply_unknown_threshold(&pred, 0.3), unknown);
        let yes = onehot(0, "m");
        assert_eq!(apply_unknown_threshold(&yes, 1.0), 0);
    }

    #[test]
    fn confusion() {
        let m = confusion_matrix(&[(0, 0), (0, 1), (1, 1)]).unwrap();
        assert_eq!(m.counts[0][1], 1);
        assert!((m.accuracy() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.total(), 3);
        assert_eq!(m.row_total(0), 2);
        let all: Vec<(usize, usize)> = (0..12).map(|c| (c, c)).collect();
        assert_eq!(accuracy(&all).unwrap(), 1.0);
        assert_eq!(confusion_matrix(&[(12, 0)]), Err(EvalError::IndexOutOfRange(12)));
        assert_eq!(confusion_matrix(&[(0, 13)]), Err(EvalError::IndexOutOfRange(13)));
        let _ = vec![0];
    }
}
