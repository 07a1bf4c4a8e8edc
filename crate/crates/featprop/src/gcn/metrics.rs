//! Multiclass classification metrics: accuracy, Macro-F1, Micro-F1.

use crate::graph::LabelVector;
use ndarray::ArrayView2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("prediction has {found} entries, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("metrics need at least one sample")]
    Empty,
    #[error("predicted label {label} out of range for {n_classes} classes")]
    PredictionOutOfRange { label: usize, n_classes: usize },
}

/// Argmax per row, ties to the lowest class index.
pub fn predict_labels(probabilities: &ArrayView2<f64>) -> Vec<usize> {
    probabilities
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0usize;
            let mut best_v = row[0];
            for (c, &v) in row.iter().enumerate().skip(1) {
                if v > best_v {
                    best_v = v;
                    best = c;
                }
            }
            best
        })
        .collect()
}

struct Confusion {
    tp: Vec<usize>,
    fp: Vec<usize>,
    fun: Vec<usize>,
    correct: usize,
    total: usize,
}

fn confusion(pred: &[usize], truth: &LabelVector) -> Result<Confusion, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    let c = truth.n_classes();
    let mut conf = Confusion {
        tp: vec![0; c],
        fp: vec![0; c],
        fun: vec![0; c],
        correct: 0,
        total: pred.len(),
    };
    for (i, &p) in pred.iter().enumerate() {
        if p >= c {
            return Err(MetricsError::PredictionOutOfRange { label: p, n_classes: c });
        }
        let t = truth.label(i);
        if p == t {
            conf.tp[t] += 1;
            conf.correct += 1;
        } else {
            conf.fp[p] += 1;
            conf.fun[t] += 1;
        }
    }
    Ok(conf)
}

/// Unweighted mean of per-class F1 over all `n_classes` classes. A class
/// with no true and no predicted samples contributes F1 = 0.
pub fn macro_f1(pred: &[usize], truth: &LabelVector) -> Result<f64, MetricsError> {
    let conf = confusion(pred, truth)?;
    let c = truth.n_classes();
    let mut sum = 0.0;
    for k in 0..c {
        let denom = 2 * conf.tp[k] + conf.fp[k] + conf.fun[k];
        if denom > 0 {
            sum += 2.0 * conf.tp[k] as f64 / denom as f64;
        }
    }
    Ok(sum / c as f64)
}

/// F1 over globally pooled counts. In single-label multiclass prediction
/// every error is one false positive and one false negative, so this equals
/// accuracy exactly.
pub fn micro_f1(pred: &[usize], truth: &LabelVector) -> Result<f64, MetricsError> {
    let conf = confusion(pred, truth)?;
    let tp: usize = conf.tp.iter().sum();
    let fp: usize = conf.fp.iter().sum();
    let fun: usize = conf.fun.iter().sum();
    Ok(2.0 * tp as f64 / (2 * tp + fp + fun) as f64)
}

/// Fraction of correct predictions.
pub fn accuracy(pred: &[usize], truth: &LabelVector) -> Result<f64, MetricsError> {
    let conf = confusion(pred, truth)?;
    Ok(conf.correct as f64 / conf.total as f64)
}
