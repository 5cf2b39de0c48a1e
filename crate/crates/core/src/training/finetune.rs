//! Classification fine-tuning with early stopping on dev accuracy.

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::batch::{batch_gradients, EpochOrder};
use super::early_stopping::{EarlyStopping, StopDecision};
use super::optimizer::{adam_step, AdamConfig, OptimizerState};
use super::schedule::clamped_warmup_lr;
use super::{TAG_CLASSIFIER, TAG_DROPOUT, TAG_SHUFFLE};
use crate::corpus::{DatasetSplit, LabeledExample};
use crate::encoder::{Mode, ModelParams, Objective};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::tokenizer::{Encoding, TokenizerModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinetuneConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub warmup_steps: u64,
    pub num_classes: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub weight_decay: f64,
    /// Encoding length limit for the classified texts.
    pub max_sequence_length: usize,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-5,
            batch_size: 4,
            max_epochs: 30,
            patience: 2,
            warmup_steps: 100_000,
            num_classes: 8,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            weight_decay: 0.0,
            max_sequence_length: 512,
        }
    }
}

impl FinetuneConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: 1e-8,
            weight_decay: self.weight_decay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidConfig("batch_size and max_epochs must be at least 1".into()));
        }
        if self.patience >= self.max_epochs {
            return Err(Error::InvalidConfig(format!(
                "patience ({}) must be smaller than max_epochs ({})",
                self.patience, self.max_epochs
            )));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig("at least two classes are needed".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedExample {
    pub doc_id: String,
    pub encoding: Encoding,
    pub label: usize,
}

pub fn encode_examples(
    examples: &[LabeledExample],
    tokenizer: &TokenizerModel,
    max_sequence_length: usize,
) -> Result<Vec<EncodedExample>> {
    let tok = tokenizer.clone().with_max_sequence_length(max_sequence_length);
    examples
        .par_iter()
        .map(|e| {
            Ok(EncodedExample {
                doc_id: e.doc_id.clone(),
                encoding: tok.encode(&e.text, None)?,
                label: e.label,
            })
        })
        .collect()
}

/// Tokenized train/dev/test subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneData {
    pub train: Vec<EncodedExample>,
    pub dev: Vec<EncodedExample>,
    pub test: Vec<EncodedExample>,
}

impl FinetuneData {
    pub fn encode(split: &DatasetSplit, tokenizer: &TokenizerModel, max_sequence_length: usize) -> Result<Self> {
        Ok(Self {
            train: encode_examples(&split.train, tokenizer, max_sequence_length)?,
            dev: encode_examples(&split.dev, tokenizer, max_sequence_length)?,
            test: encode_examples(&split.test, tokenizer, max_sequence_length)?,
        })
    }
}

/// Argmax class of every example, in eval mode.
pub fn predict(params: &ModelParams, examples: &[EncodedExample]) -> Result<Vec<usize>> {
    examples
        .par_iter()
        .map(|e| {
            let out = params.forward(&e.encoding, Mode::Eval)?;
            let (logits, _) = params.classifier_logits(&out.hidden, Mode::Eval)?;
            Ok(logits
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
                .0)
        })
        .collect()
}

/// Fraction of examples whose predicted class equals the label.
pub fn accuracy(params: &ModelParams, examples: &[EncodedExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::EmptyDataset("accuracy of an empty set".into()));
    }
    let predictions = predict(params, examples)?;
    let correct = predictions.iter().zip(examples).filter(|(p, e)| **p == e.label).count();
    Ok(correct as f64 / examples.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinetuneRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch (dropout active).
    pub train_loss: f64,
    pub dev_accuracy: f64,
    /// Learning rate of the epoch's last update.
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
pub struct FinetuneOutcome {
    /// Parameters from the best dev epoch.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub best_dev_accuracy: f64,
    pub stopped_early: bool,
    pub history: Vec<FinetuneRecord>,
}

/// Ensures `params` carries a classifier with `num_classes` outputs,
/// attaching a freshly initialized one otherwise.
pub fn with_classifier(params: &ModelParams, num_classes: usize, seed: u64) -> Result<ModelParams> {
    let mut p = params.clone();
    if p.classifier.as_ref().map(|c| c.num_classes()) != Some(num_classes) {
        p.attach_classifier(num_classes, derive_seed(seed, &[TAG_CLASSIFIER]))?;
    }
    Ok(p)
}

/// Trains for up to `max_epochs`, evaluating dev accuracy after each epoch
/// and stopping once it has failed to improve `patience` times in a row.
pub fn finetune(params: &ModelParams, data: &FinetuneData, config: &FinetuneConfig) -> Result<FinetuneOutcome> {
    config.validate()?;
    if data.train.is_empty() || data.dev.is_empty() {
        return Err(Error::EmptyDataset("fine-tuning needs non-empty train and dev sets".into()));
    }
    if let Some(e) = data.train.iter().chain(&data.dev).find(|e| e.label >= config.num_classes) {
        return Err(Error::OutOfRange(format!(
            "{}: label {} outside {} classes",
            e.doc_id, e.label, config.num_classes
        )));
    }
    let mut params = with_classifier(params, config.num_classes, config.seed)?;
    let adam = config.adam();
    let mut optimizer = OptimizerState::new(&params);
    let steps_per_epoch = data.train.len().div_ceil(config.batch_size) as u64;
    let total_steps = steps_per_epoch * config.max_epochs as u64;
    let mut order = EpochOrder::new(config.seed, TAG_SHUFFLE, data.train.len());
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best = params.clone();
    let mut history = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        let perm = order.permutation(epoch as u64 - 1).to_vec();
        let mut loss_sum = 0.0;
        let mut lr = 0.0;
        for chunk in perm.chunks(config.batch_size) {
            let step = optimizer.step;
            let items: Vec<_> = chunk
                .iter()
                .enumerate()
                .map(|(j, &i)| {
                    let e = &data.train[i];
                    let dropout_seed = derive_seed(config.seed, &[TAG_DROPOUT, step, j as u64]);
                    (&e.encoding, Objective::Classification { label: e.label }, Mode::Train { dropout_seed })
                })
                .collect();
            let (grads, stats) = batch_gradients(&params, &items, 1.0 / chunk.len() as f64)?;
            lr = clamped_warmup_lr(step + 1, config.warmup_steps, total_steps, config.learning_rate)?;
            adam_step(&mut params, &grads, &mut optimizer, lr, &adam)?;
            loss_sum += stats.loss_sum;
        }
        let dev_accuracy = accuracy(&params, &data.dev)?;
        let record = FinetuneRecord {
            epoch,
            train_loss: loss_sum / data.train.len() as f64,
            dev_accuracy,
            learning_rate: lr,
        };
        info!(
            "epoch {epoch}: train loss {:.4}, dev accuracy {:.4}",
            record.train_loss, dev_accuracy
        );
        history.push(record);
        match stopper.observe(dev_accuracy) {
            StopDecision::Improved => best = params.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                info!(
                    "early stop after epoch {epoch}; best dev accuracy {:.4} at epoch {}",
                    stopper.best.unwrap_or(0.0),
                    stopper.best_epoch
                );
                stopped_early = true;
                break;
            }
        }
    }
    Ok(FinetuneOutcome {
        params: best,
        best_epoch: stopper.best_epoch,
        best_dev_accuracy: stopper.best.unwrap_or(0.0),
        stopped_early,
        history,
    })
}
