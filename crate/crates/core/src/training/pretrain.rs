//! Masked-language-model pre-training from scratch or from a checkpoint.

use std::path::PathBuf;

use log::info;
use serde::{Deserialize, Serialize};

use super::batch::{batch_gradients, EpochOrder};
use super::masking::{mask_batch, MaskingPolicy};
use super::optimizer::{adam_step, AdamConfig, OptimizerState};
use super::schedule::linear_warmup_lr;
use super::{TAG_DROPOUT, TAG_INIT, TAG_SHUFFLE};
use crate::encoder::{Checkpoint, EncoderConfig, Mode, ModelParams, Objective};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::tokenizer::{Encoding, SpecialTokens, TokenizerModel, DEFAULT_MAX_SEQUENCE_LENGTH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub encoder: EncoderConfig,
    #[serde(default = "defaults::total_steps")]
    pub total_steps: u64,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "defaults::beta1")]
    pub adam_beta1: f64,
    #[serde(default = "defaults::beta2")]
    pub adam_beta2: f64,
    #[serde(default = "defaults::weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "defaults::warmup_steps")]
    pub warmup_steps: u64,
    /// Warm start for further pre-training of an existing model.
    #[serde(default)]
    pub init_checkpoint: Option<PathBuf>,
    /// Window length including the start and end tokens.
    #[serde(default = "defaults::sequence_length")]
    pub sequence_length: usize,
    /// Save interval in steps; 0 saves only at the end.
    #[serde(default)]
    pub checkpoint_every: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub masking: MaskingPolicy,
}

mod defaults {
    pub fn total_steps() -> u64 {
        1_000_000
    }
    pub fn batch_size() -> usize {
        8
    }
    pub fn learning_rate() -> f64 {
        1e-4
    }
    pub fn beta1() -> f64 {
        0.9
    }
    pub fn beta2() -> f64 {
        0.999
    }
    pub fn weight_decay() -> f64 {
        0.1
    }
    pub fn warmup_steps() -> u64 {
        10_000
    }
    pub fn sequence_length() -> usize {
        super::DEFAULT_MAX_SEQUENCE_LENGTH
    }
}

impl PretrainConfig {
    /// Published hyperparameters around the given encoder shape.
    pub fn new(encoder: EncoderConfig) -> Self {
        Self {
            encoder,
            total_steps: defaults::total_steps(),
            batch_size: defaults::batch_size(),
            learning_rate: defaults::learning_rate(),
            adam_beta1: defaults::beta1(),
            adam_beta2: defaults::beta2(),
            weight_decay: defaults::weight_decay(),
            warmup_steps: defaults::warmup_steps(),
            init_checkpoint: None,
            sequence_length: defaults::sequence_length(),
            checkpoint_every: 0,
            seed: 0,
            masking: MaskingPolicy::default(),
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: 1e-8,
            weight_decay: self.weight_decay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.masking.validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.warmup_steps > self.total_steps || (self.total_steps > 0 && self.warmup_steps == self.total_steps) {
            return Err(Error::InvalidConfig(format!(
                "warmup_steps ({}) must be smaller than total_steps ({})",
                self.warmup_steps, self.total_steps
            )));
        }
        if self.sequence_length < 3 || self.sequence_length > self.encoder.max_positions {
            return Err(Error::InvalidConfig(format!(
                "sequence_length {} must lie in 3..={}",
                self.sequence_length, self.encoder.max_positions
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Fixed-length training windows `[<s>, body…, </s>]` cut from the
/// concatenation of all documents, each document followed by `</s>`.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainCorpus {
    pub windows: Vec<Encoding>,
}

impl PretrainCorpus {
    /// Cuts contiguous, non-overlapping windows; a trailing partial window
    /// is dropped.
    pub fn from_token_documents<D: AsRef<[u32]>>(documents: &[D], sequence_length: usize) -> Result<Self> {
        if sequence_length < 3 {
            return Err(Error::InvalidConfig("sequence_length must be at least 3".into()));
        }
        let specials = SpecialTokens::default();
        let body = sequence_length - 2;
        let mut stream = Vec::new();
        for d in documents {
            stream.extend_from_slice(d.as_ref());
            stream.push(specials.sequence_end);
        }
        let windows: Vec<Encoding> = stream
            .chunks_exact(body)
            .map(|chunk| {
                let mut ids = Vec::with_capacity(sequence_length);
                ids.push(specials.sequence_start);
                ids.extend_from_slice(chunk);
                ids.push(specials.sequence_end);
                Encoding::from_ids(ids)
            })
            .collect();
        if windows.is_empty() {
            return Err(Error::EmptyDataset(format!(
                "corpus of {} tokens is smaller than one window of {sequence_length}",
                stream.len()
            )));
        }
        Ok(Self { windows })
    }

    pub fn from_texts<S: AsRef<str>>(texts: &[S], tokenizer: &TokenizerModel, sequence_length: usize) -> Result<Self> {
        let docs: Vec<Vec<u32>> = texts.iter().map(|t| tokenizer.encode_ids(t.as_ref())).collect();
        Self::from_token_documents(&docs, sequence_length)
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// One optimizer step of the loss history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PretrainRecord {
    /// Updates completed, counting this one.
    pub step: u64,
    /// Mean cross-entropy over the masked positions of the batch.
    pub loss: f64,
    pub masked_tokens: usize,
    pub learning_rate: f64,
}

/// Everything needed to continue a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainState {
    pub params: ModelParams,
    pub optimizer: OptimizerState,
}

impl PretrainState {
    pub fn fresh(params: ModelParams) -> Self {
        let optimizer = OptimizerState::new(&params);
        Self { params, optimizer }
    }

    /// Starting point for `config`: the warm-start checkpoint if one is
    /// named, otherwise a seeded random initialization.
    pub fn initial(config: &PretrainConfig) -> Result<Self> {
        let params = match &config.init_checkpoint {
            Some(path) => {
                let mut params = Checkpoint::load(path)?.params;
                if params.config != config.encoder {
                    return Err(Error::ConfigMismatch(format!(
                        "{} holds {:?}, configured {:?}",
                        path.display(),
                        params.config,
                        config.encoder
                    )));
                }
                params.classifier = None;
                params
            }
            None => ModelParams::init(&config.encoder, derive_seed(config.seed, &[TAG_INIT]))?,
        };
        Ok(Self::fresh(params))
    }

    pub fn to_checkpoint(&self, seed: u64) -> Checkpoint {
        let mut ck = Checkpoint::new(self.params.clone());
        ck.metadata.step = self.optimizer.step;
        ck.metadata.seed = seed;
        ck.aux = self.optimizer.to_aux();
        ck
    }

    /// Inverse of [`PretrainState::to_checkpoint`]. A checkpoint without
    /// optimizer tensors starts with fresh moments at its recorded step.
    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        let mut params = ck.params;
        params.classifier = None;
        let optimizer = if ck.aux.is_empty() {
            let mut o = OptimizerState::new(&params);
            o.step = ck.metadata.step;
            o
        } else {
            OptimizerState::from_aux(&params, &ck.aux, ck.metadata.step)?
        };
        Ok(Self { params, optimizer })
    }
}

#[derive(Debug, Clone)]
pub struct PretrainRun {
    pub state: PretrainState,
    pub history: Vec<PretrainRecord>,
}

/// Runs the full schedule from the configured starting point.
pub fn pretrain(corpus: &PretrainCorpus, config: &PretrainConfig, tokenizer: &TokenizerModel) -> Result<PretrainRun> {
    let start = PretrainState::initial(config)?;
    pretrain_from(corpus, config, tokenizer, start, &mut |_, _| Ok(()))
}

/// Continues from `start` (whose optimizer step says how far the schedule
/// has advanced) to `config.total_steps`. `on_checkpoint` sees the state
/// every `checkpoint_every` steps and the history produced by this call.
///
/// Step `s` draws its batch, masks and dropout from seeds derived from
/// `(seed, s)` alone, so a resumed run repeats an uninterrupted one exactly.
pub fn pretrain_from(
    corpus: &PretrainCorpus,
    config: &PretrainConfig,
    tokenizer: &TokenizerModel,
    start: PretrainState,
    on_checkpoint: &mut dyn FnMut(&PretrainState, &[PretrainRecord]) -> Result<()>,
) -> Result<PretrainRun> {
    config.validate()?;
    if tokenizer.vocab_size() != config.encoder.vocab_size {
        return Err(Error::ConfigMismatch(format!(
            "tokenizer has {} tokens, encoder expects {}",
            tokenizer.vocab_size(),
            config.encoder.vocab_size
        )));
    }
    if start.params.config != config.encoder {
        return Err(Error::ConfigMismatch("starting parameters do not match the encoder config".into()));
    }
    if let Some(w) = corpus.windows.iter().find(|w| w.len() != config.sequence_length) {
        return Err(Error::ConfigMismatch(format!(
            "corpus window of {} tokens, configured {}",
            w.len(),
            config.sequence_length
        )));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyDataset("no pre-training windows".into()));
    }
    if start.optimizer.step > config.total_steps {
        return Err(Error::OutOfRange(format!(
            "resume step {} beyond total {}",
            start.optimizer.step, config.total_steps
        )));
    }
    let adam = config.adam();
    let batch = config.batch_size as u64;
    let mut order = EpochOrder::new(config.seed, TAG_SHUFFLE, corpus.len());
    let mut state = start;
    let mut history = Vec::new();
    info!(
        "pre-training steps {}..{} over {} windows of {}",
        state.optimizer.step,
        config.total_steps,
        corpus.len(),
        config.sequence_length
    );
    while state.optimizer.step < config.total_steps {
        let step = state.optimizer.step;
        let picked: Vec<Encoding> = (0..batch)
            .map(|j| corpus.windows[order.at(step * batch + j)].clone())
            .collect();
        let policy = config.masking.derived(&[config.seed, step]);
        let masked = mask_batch(&picked, &policy, config.encoder.vocab_size)?;
        let targets = masked.num_targets();
        let scale = if targets == 0 { 0.0 } else { 1.0 / targets as f64 };
        let items: Vec<_> = masked
            .inputs
            .iter()
            .zip(&masked.labels)
            .enumerate()
            .map(|(j, (enc, labels))| {
                let dropout_seed = derive_seed(config.seed, &[TAG_DROPOUT, step, j as u64]);
                (enc, Objective::MaskedLm { labels }, Mode::Train { dropout_seed })
            })
            .collect();
        let (grads, stats) = batch_gradients(&state.params, &items, scale)?;
        let lr = linear_warmup_lr(step + 1, config.warmup_steps, config.total_steps, config.learning_rate)?;
        adam_step(&mut state.params, &grads, &mut state.optimizer, lr, &adam)?;
        let record = PretrainRecord {
            step: step + 1,
            loss: stats.mean(),
            masked_tokens: targets,
            learning_rate: lr,
        };
        log::debug!("step {} loss {:.4} lr {:e}", record.step, record.loss, lr);
        history.push(record);
        let done = state.optimizer.step;
        if config.checkpoint_every > 0 && done.is_multiple_of(config.checkpoint_every) && done < config.total_steps {
            on_checkpoint(&state, &history)?;
        }
    }
    on_checkpoint(&state, &history)?;
    Ok(PretrainRun { state, history })
}

/// Mean loss over the records with `end − window < step ≤ end` that scored
/// at least one token.
pub fn smoothed_loss(history: &[PretrainRecord], end: u64, window: u64) -> Option<f64> {
    let start = end.saturating_sub(window);
    let picked: Vec<f64> = history
        .iter()
        .filter(|r| r.step > start && r.step <= end && r.masked_tokens > 0)
        .map(|r| r.loss)
        .collect();
    (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_config(steps: u64) -> PretrainConfig {
        let mut encoder = EncoderConfig::new(1, 8, 2, 261).with_max_positions(16);
        encoder.dropout_rate = 0.1;
        PretrainConfig {
            total_steps: steps,
            batch_size: 2,
            learning_rate: 1e-3,
            warmup_steps: 0,
            sequence_length: 10,
            seed: 3,
            ..PretrainConfig::new(encoder)
        }
    }

    fn corpus() -> PretrainCorpus {
        let docs: Vec<Vec<u32>> = (0..12u32).map(|d| (0..15).map(|i| 5 + (d * 7 + i) % 40).collect()).collect();
        PretrainCorpus::from_token_documents(&docs, 10).unwrap()
    }

    fn tokenizer() -> TokenizerModel {
        TokenizerModel::from_merges(&[]).unwrap()
    }

    #[test]
    fn windows_are_contiguous() {
        let c = PretrainCorpus::from_token_documents(&[vec![10, 11, 12], vec![13, 14]], 5).unwrap();
        // Stream: 10 11 12 </s> 13 14 </s>; the last token is dropped.
        assert_eq!(c.windows[0].token_ids, vec![0, 10, 11, 12, 1]);
        assert_eq!(c.windows[1].token_ids, vec![0, 1, 13, 14, 1]);
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn tiny_corpus_is_rejected() {
        let err = PretrainCorpus::from_token_documents(&[vec![10, 11]], 10).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset(_)));
    }

    #[test]
    fn zero_steps_returns_initialization() {
        let cfg = toy_config(0);
        let run = pretrain(&corpus(), &cfg, &tokenizer()).unwrap();
        assert!(run.history.is_empty());
        assert_eq!(run.state.params, PretrainState::initial(&cfg).unwrap().params);
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let cfg = PretrainConfig {
            checkpoint_every: 4,
            ..toy_config(10)
        };
        let full = pretrain(&corpus(), &cfg, &tokenizer()).unwrap();
        let mut saved = Vec::new();
        pretrain_from(&corpus(), &cfg, &tokenizer(), PretrainState::initial(&cfg).unwrap(), &mut |s, h| {
            saved.push((s.to_checkpoint(cfg.seed).to_bytes()?, h.to_vec()));
            Ok(())
        })
        .unwrap();
        assert_eq!(saved.len(), 3);
        let (bytes, prefix) = &saved[0];
        let state = PretrainState::from_checkpoint(Checkpoint::from_bytes(bytes).unwrap()).unwrap();
        assert_eq!(state.optimizer.step, 4);
        let rest = pretrain_from(&corpus(), &cfg, &tokenizer(), state, &mut |_, _| Ok(())).unwrap();
        let joined: Vec<_> = prefix.iter().chain(&rest.history).copied().collect();
        assert_eq!(joined, full.history);
        assert_eq!(rest.state, full.state);
    }

    #[test]
    fn vocabulary_mismatch_is_a_config_error() {
        let mut cfg = toy_config(2);
        cfg.encoder.vocab_size = 300;
        let err = pretrain(&corpus(), &cfg, &tokenizer()).unwrap_err();
        assert!(matches!(err, Error::ConfigMismatch(_)));
    }

    #[test]
    fn warm_start_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("init.ckpt");
        let mut params = ModelParams::init(&toy_config(0).encoder, 77).unwrap();
        params.attach_classifier(3, 1).unwrap();
        Checkpoint::new(params.clone()).save(&path).unwrap();
        let cfg = PretrainConfig {
            init_checkpoint: Some(path),
            ..toy_config(0)
        };
        let start = PretrainState::initial(&cfg).unwrap();
        params.classifier = None;
        assert_eq!(start.params, params);

        let mut other = cfg.clone();
        other.encoder.hidden_size = 16;
        assert!(matches!(PretrainState::initial(&other), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn smoothing_window() {
        let rec = |step, loss| PretrainRecord {
            step,
            loss,
            masked_tokens: 1,
            learning_rate: 0.0,
        };
        let h = vec![rec(1, 4.0), rec(2, 2.0), rec(3, 1.0)];
        assert_eq!(smoothed_loss(&h, 2, 2), Some(3.0));
        assert_eq!(smoothed_loss(&h, 3, 1), Some(1.0));
        assert_eq!(smoothed_loss(&h, 9, 2), None);
    }
}
