//! Accuracy, per-class precision/recall/F1 and the confusion matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Nothing was predicted as this class; precision is reported as 0.
    pub precision_undefined: bool,
    /// The class has no examples; recall is reported as 0.
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub correct: usize,
    pub total: usize,
}

/// Counts indexed `[true class][predicted class]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn support(&self, class: usize) -> usize {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> usize {
        self.counts.iter().map(|row| row[class]).sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Diagonal over row sum; 0 for a class without examples.
    pub fn class_accuracy(&self, class: usize) -> f64 {
        match self.support(class) {
            0 => 0.0,
            n => self.counts[class][class] as f64 / n as f64,
        }
    }

    /// `1 − class_accuracy`; 0 for a class without examples.
    pub fn class_error_rate(&self, class: usize) -> f64 {
        match self.support(class) {
            0 => 0.0,
            _ => 1.0 - self.class_accuracy(class),
        }
    }
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

/// Report and confusion matrix of `predictions` against `labels`.
pub fn evaluate(
    predictions: &[usize],
    labels: &[usize],
    num_classes: usize,
) -> Result<(ClassificationReport, ConfusionMatrix)> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset("nothing to evaluate".into()));
    }
    let mut counts = vec![vec![0usize; num_classes]; num_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= num_classes || l >= num_classes {
            return Err(Error::OutOfRange(format!(
                "class index {} outside {num_classes} classes",
                p.max(l)
            )));
        }
        counts[l][p] += 1;
    }
    let matrix = ConfusionMatrix { counts };
    let per_class: Vec<ClassMetrics> = (0..num_classes)
        .map(|c| {
            let tp = matrix.counts[c][c];
            let support = matrix.support(c);
            let (precision, precision_undefined) = ratio(tp, matrix.predicted(c));
            let (recall, recall_undefined) = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
                precision_undefined,
                recall_undefined,
            }
        })
        .collect();
    let correct = matrix.trace();
    let total = labels.len();
    let report = ClassificationReport {
        accuracy: correct as f64 / total as f64,
        macro_precision: mean(per_class.iter().map(|m| m.precision)),
        macro_recall: mean(per_class.iter().map(|m| m.recall)),
        macro_f1: mean(per_class.iter().map(|m| m.f1)),
        per_class,
        correct,
        total,
    };
    Ok((report, matrix))
}
