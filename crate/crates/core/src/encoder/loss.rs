//! Losses over a single sequence, wired through the heads and the encoder
//! backward pass.

use ndarray::{Array1, Array2};

use super::model::Mode;
use super::ops::cross_entropy;
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::tokenizer::Encoding;

/// What the loss is computed from.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// Cross-entropy at every position with a label (`None` = ignored).
    MaskedLm { labels: &'a [Option<u32>] },
    /// Cross-entropy of the classifier output against `label`.
    Classification { label: usize },
    /// A constant loss that does not depend on the parameters.
    Detached,
}

/// Loss summed over the scored items of one sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossStats {
    pub loss_sum: f64,
    /// Masked positions for MLM, 1 for classification, 0 when detached.
    pub count: usize,
    /// Correct argmax predictions among the scored items.
    pub correct: usize,
}

impl LossStats {
    pub fn merge(&mut self, other: LossStats) {
        self.loss_sum += other.loss_sum;
        self.count += other.count;
        self.correct += other.correct;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.loss_sum / self.count as f64
        }
    }
}

fn argmax(v: ndarray::ArrayView1<f64>) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}

impl ModelParams {
    /// Forward + backward for one sequence. Gradients of `scale * loss_sum`
    /// are added to `grads`; the unscaled statistics are returned.
    pub fn accumulate_gradients(
        &self,
        encoding: &Encoding,
        objective: Objective<'_>,
        mode: Mode,
        scale: f64,
        grads: &mut ModelParams,
    ) -> Result<LossStats> {
        let out = self.forward(encoding, mode)?;
        let seq = out.hidden.nrows();
        let (stats, d_hidden) = match objective {
            Objective::Detached => (LossStats::default(), None),
            Objective::MaskedLm { labels } => {
                if labels.len() != seq {
                    return Err(Error::ShapeMismatch(format!(
                        "{} labels for a sequence of {seq}",
                        labels.len()
                    )));
                }
                let (positions, targets): (Vec<usize>, Vec<usize>) = labels
                    .iter()
                    .enumerate()
                    .filter_map(|(i, l)| l.map(|t| (i, t as usize)))
                    .unzip();
                if let Some(&bad) = targets.iter().find(|&&t| t >= self.config.vocab_size) {
                    return Err(Error::OutOfRange(format!("label {bad} outside vocabulary")));
                }
                if positions.is_empty() {
                    (LossStats::default(), None)
                } else {
                    let (logits, trace) = self.mlm_logits(&out.hidden, &positions)?;
                    let mut d_logits = Array2::zeros(logits.raw_dim());
                    let mut stats = LossStats::default();
                    for (i, &t) in targets.iter().enumerate() {
                        stats.loss_sum += cross_entropy(logits.row(i), t, d_logits.row_mut(i));
                        stats.count += 1;
                        stats.correct += usize::from(argmax(logits.row(i)) == t);
                    }
                    d_logits *= scale;
                    (stats, Some(self.mlm_backward(&trace, &d_logits, seq, grads)))
                }
            }
            Objective::Classification { label } => {
                let (logits, trace) = self.classifier_logits(&out.hidden, mode)?;
                if label >= logits.len() {
                    return Err(Error::OutOfRange(format!(
                        "label {label} outside {} classes",
                        logits.len()
                    )));
                }
                let mut d_logits = Array1::zeros(logits.len());
                let loss = cross_entropy(logits.view(), label, d_logits.view_mut());
                let stats = LossStats {
                    loss_sum: loss,
                    count: 1,
                    correct: usize::from(argmax(logits.view()) == label),
                };
                d_logits *= scale;
                (stats, Some(self.classifier_backward(&trace, &d_logits, seq, grads)))
            }
        };
        if let Some(d) = d_hidden {
            self.backward(&out.trace, &d, grads);
        }
        Ok(stats)
    }

    /// Mean loss of one sequence and its gradient with respect to every
    /// parameter.
    pub fn loss_and_gradients(
        &self,
        encoding: &Encoding,
        objective: Objective<'_>,
        mode: Mode,
    ) -> Result<(f64, ModelParams)> {
        let count = match objective {
            Objective::MaskedLm { labels } => labels.iter().flatten().count(),
            Objective::Classification { .. } => 1,
            Objective::Detached => 0,
        };
        let scale = if count == 0 { 0.0 } else { 1.0 / count as f64 };
        let mut grads = self.zeros_like();
        let stats = self.accumulate_gradients(encoding, objective, mode, scale, &mut grads)?;
        Ok((stats.mean(), grads))
    }

    /// Loss only; used by finite-difference checks and evaluation.
    pub fn loss(&self, encoding: &Encoding, objective: Objective<'_>, mode: Mode) -> Result<f64> {
        let out = self.forward(encoding, mode)?;
        match objective {
            Objective::Detached => Ok(0.0),
            Objective::MaskedLm { labels } => {
                let (positions, targets): (Vec<usize>, Vec<usize>) = labels
                    .iter()
                    .enumerate()
                    .filter_map(|(i, l)| l.map(|t| (i, t as usize)))
                    .unzip();
                if positions.is_empty() {
                    return Ok(0.0);
                }
                let (logits, _) = self.mlm_logits(&out.hidden, &positions)?;
                let mut scratch = Array1::zeros(logits.ncols());
                let total: f64 = targets
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| cross_entropy(logits.row(i), t, scratch.view_mut()))
                    .sum();
                Ok(total / positions.len() as f64)
            }
            Objective::Classification { label } => {
                let (logits, _) = self.classifier_logits(&out.hidden, mode)?;
                let mut scratch = Array1::zeros(logits.len());
                Ok(cross_entropy(logits.view(), label, scratch.view_mut()))
            }
        }
    }
}
