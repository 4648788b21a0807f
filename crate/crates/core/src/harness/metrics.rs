//! Per-class precision, ranking average precision and confusion matrices.

use crate::datamodel::{EventClass, LabeledDataset};
use crate::error::{Error, Result};
use crate::network::{argmax, predict_proba, Matrix, SmlpModel};

use super::train::to_matrix;

const C: usize = EventClass::COUNT;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// TP / (TP + FP), or 0 for a class that is never predicted.
    pub precision: [f64; C],
    pub average_precision: [f64; C],
    pub map: f64,
    pub macro_precision: f64,
    /// `confusion[actual][predicted]`.
    pub confusion: [[usize; C]; C],
    pub accuracy: f64,
}

/// Average precision of ranking `scores` (descending, ties in index order)
/// against `relevant`; 0 when nothing is relevant.
pub fn average_precision(scores: &[f64], relevant: &[bool]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if relevant[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

/// Report for per-class scores (one row per instance, one column per class).
pub fn evaluate_scores(scores: &Matrix, labels: &[usize]) -> Result<EvalReport> {
    if labels.is_empty() {
        return Err(Error::data("cannot evaluate on an empty test set"));
    }
    if scores.rows() != labels.len() || scores.cols() != C {
        return Err(Error::Shape(format!(
            "scores are {}x{}, expected {}x{C}",
            scores.rows(),
            scores.cols(),
            labels.len()
        )));
    }
    let mut confusion = [[0usize; C]; C];
    for (r, &y) in labels.iter().enumerate() {
        confusion[y][argmax(scores.row(r))] += 1;
    }
    let mut precision = [0.0; C];
    let mut average_precision = [0.0; C];
    for c in 0..C {
        let predicted: usize = (0..C).map(|a| confusion[a][c]).sum();
        if predicted > 0 {
            precision[c] = confusion[c][c] as f64 / predicted as f64;
        }
        let column: Vec<f64> = (0..labels.len()).map(|r| scores.row(r)[c]).collect();
        let relevant: Vec<bool> = labels.iter().map(|&y| y == c).collect();
        average_precision[c] = self::average_precision(&column, &relevant);
    }
    let correct: usize = (0..C).map(|c| confusion[c][c]).sum();
    Ok(EvalReport {
        precision,
        average_precision,
        map: average_precision.iter().sum::<f64>() / C as f64,
        macro_precision: precision.iter().sum::<f64>() / C as f64,
        confusion,
        accuracy: correct as f64 / labels.len() as f64,
    })
}

/// Evaluate `model` on an already-normalized test set.
pub fn evaluate(model: &SmlpModel, test: &LabeledDataset) -> Result<EvalReport> {
    let (x, y) = to_matrix(test);
    if x.rows() == 0 {
        return Err(Error::data("cannot evaluate on an empty test set"));
    }
    evaluate_scores(&predict_proba(model, &x)?, &y)
}
