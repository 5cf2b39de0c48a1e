//! The pipeline config file. Every field has a default (the published
//! setup), a TOML file overrides defaults, and command-line flags override
//! the file.

use std::fs;
use std::path::{Path, PathBuf};

use legal_lm::corpus::{SplitSpec, Task};
use legal_lm::encoder::{EncoderConfig, PROFILES};
use legal_lm::training::{FinetuneConfig, MaskingPolicy, PretrainConfig, DEFAULT_GRID};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root of every derived seed: splits, initialization, masking, dropout.
    pub seed: u64,
    pub task: Task,
    pub paths: PathsConfig,
    pub prepare: PrepareConfig,
    pub split: SplitConfig,
    pub tokenizer: TokenizerConfig,
    pub model: ModelConfig,
    pub pretrain: PretrainSection,
    pub finetune: FinetuneSection,
    pub gridsearch: GridSearchSection,
    pub evaluate: EvaluateSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            task: Task::Chambers,
            paths: PathsConfig::default(),
            prepare: PrepareConfig::default(),
            split: SplitConfig::default(),
            tokenizer: TokenizerConfig::default(),
            model: ModelConfig::default(),
            pretrain: PretrainSection::default(),
            finetune: FinetuneSection::default(),
            gridsearch: GridSearchSection::default(),
            evaluate: EvaluateSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Labeled pleadings: a JSONL file or a directory of text files.
    pub corpus: Option<PathBuf>,
    /// Unlabeled pre-training text in the same formats. When absent the
    /// training split of the pleadings is used.
    pub pretrain_corpus: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            pretrain_corpus: None,
            output_dir: PathBuf::from("runs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepareConfig {
    /// Classes with fewer examples are removed.
    pub min_class_count: usize,
    /// Classify the `ALORS QUE` paragraphs instead of the whole document.
    pub extract_alors_que: bool,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        Self {
            min_class_count: 3,
            extract_alors_que: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub dev_fraction: f64,
    pub test_fraction: f64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            dev_fraction: 0.14,
            test_fraction: 0.16,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    /// Upper bound on the vocabulary, special tokens included.
    pub vocab_size: usize,
    pub min_frequency: u64,
    pub max_sequence_length: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            vocab_size: 32_000,
            min_frequency: 2,
            max_sequence_length: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// `tiny`, `mini`, `small`, `base` or `custom`.
    pub profile: String,
    /// Required for `custom`, otherwise overrides the profile.
    pub num_layers: Option<usize>,
    pub hidden_size: Option<usize>,
    pub num_heads: Option<usize>,
    /// Defaults to four times the hidden size.
    pub feed_forward_size: Option<usize>,
    /// Defaults to the trained tokenizer's size; a different value is a
    /// configuration mismatch.
    pub vocab_size: Option<usize>,
    pub max_positions: usize,
    pub dropout_rate: f64,
    pub tie_word_embeddings: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            profile: "small".into(),
            num_layers: None,
            hidden_size: None,
            num_heads: None,
            feed_forward_size: None,
            vocab_size: None,
            max_positions: 512,
            dropout_rate: 0.1,
            tie_word_embeddings: true,
        }
    }
}

/// Which text pre-training and tokenizer training read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CorpusSubset {
    /// `paths.pretrain_corpus` when set, else the pleadings.
    Auto,
    /// `paths.pretrain_corpus`; an error when unset.
    Full,
    /// Only the training split of the prepared pleadings.
    Pleadings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainSection {
    pub total_steps: u64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub weight_decay: f64,
    pub warmup_steps: u64,
    pub init_checkpoint: Option<PathBuf>,
    pub sequence_length: usize,
    pub checkpoint_every: u64,
    pub corpus_subset: CorpusSubset,
    pub masking: MaskingPolicy,
}

impl Default for PretrainSection {
    fn default() -> Self {
        let base = PretrainConfig::new(EncoderConfig::new(1, 1, 1, 1));
        Self {
            total_steps: base.total_steps,
            batch_size: base.batch_size,
            learning_rate: base.learning_rate,
            adam_beta1: base.adam_beta1,
            adam_beta2: base.adam_beta2,
            weight_decay: base.weight_decay,
            warmup_steps: base.warmup_steps,
            init_checkpoint: None,
            sequence_length: base.sequence_length,
            checkpoint_every: 10_000,
            corpus_subset: CorpusSubset::Auto,
            masking: MaskingPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneSection {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub warmup_steps: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub weight_decay: f64,
    pub max_sequence_length: usize,
    /// Pre-trained starting point; defaults to the pretrain output.
    pub checkpoint: Option<PathBuf>,
}

impl Default for FinetuneSection {
    fn default() -> Self {
        let base = FinetuneConfig::default();
        Self {
            learning_rate: base.learning_rate,
            batch_size: base.batch_size,
            max_epochs: base.max_epochs,
            patience: base.patience,
            warmup_steps: base.warmup_steps,
            adam_beta1: base.adam_beta1,
            adam_beta2: base.adam_beta2,
            weight_decay: base.weight_decay,
            max_sequence_length: base.max_sequence_length,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSearchSection {
    pub rates: Vec<f64>,
    /// Row label in the results table; defaults to the profile name.
    pub model_name: Option<String>,
}

impl Default for GridSearchSection {
    fn default() -> Self {
        Self {
            rates: DEFAULT_GRID.to_vec(),
            model_name: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    /// Fine-tuned model to score; defaults to the grid-search winner, then
    /// the fine-tune output.
    pub checkpoint: Option<PathBuf>,
    /// Score an existing `doc_id,true_label,predicted_label` dump instead.
    pub predictions: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                CliError::missing(path, "config file not found")
            } else {
                CliError::ConfigFile {
                    path: path.into(),
                    message: e.to_string(),
                }
            }
        })?;
        toml::from_str(&text).map_err(|e| CliError::ConfigFile {
            path: path.into(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            dev_fraction: self.split.dev_fraction,
            test_fraction: self.split.test_fraction,
            stratified: self.split.stratified,
            seed: self.seed,
        }
    }

    /// Encoder shape for a tokenizer of `tokenizer_vocab` tokens.
    pub fn encoder(&self, tokenizer_vocab: usize) -> Result<EncoderConfig> {
        let m = &self.model;
        if let Some(v) = m.vocab_size {
            if v != tokenizer_vocab {
                return Err(legal_lm::Error::ConfigMismatch(format!(
                    "model.vocab_size = {v} but the tokenizer has {tokenizer_vocab} tokens"
                ))
                .into());
            }
        }
        let base = if m.profile == "custom" {
            let need = |v: Option<usize>, name: &str| {
                v.ok_or_else(|| legal_lm::Error::InvalidConfig(format!("profile \"custom\" needs model.{name}")))
            };
            EncoderConfig::new(
                need(m.num_layers, "num_layers")?,
                need(m.hidden_size, "hidden_size")?,
                need(m.num_heads, "num_heads")?,
                tokenizer_vocab,
            )
        } else {
            let mut c = EncoderConfig::profile(&m.profile, tokenizer_vocab).map_err(|_| {
                let names: Vec<&str> = PROFILES.iter().map(|p| p.0).collect();
                legal_lm::Error::InvalidConfig(format!(
                    "unknown profile {:?}; expected one of {names:?} or \"custom\"",
                    m.profile
                ))
            })?;
            c.num_layers = m.num_layers.unwrap_or(c.num_layers);
            c.num_heads = m.num_heads.unwrap_or(c.num_heads);
            if let Some(h) = m.hidden_size {
                c.hidden_size = h;
                c.feed_forward_size = 4 * h;
            }
            c
        };
        let config = EncoderConfig {
            feed_forward_size: m.feed_forward_size.unwrap_or(base.feed_forward_size),
            max_positions: m.max_positions,
            dropout_rate: m.dropout_rate,
            tie_word_embeddings: m.tie_word_embeddings,
            ..base
        };
        config.validate()?;
        Ok(config)
    }

    pub fn pretrain_config(&self, encoder: EncoderConfig) -> PretrainConfig {
        let p = &self.pretrain;
        PretrainConfig {
            encoder,
            total_steps: p.total_steps,
            batch_size: p.batch_size,
            learning_rate: p.learning_rate,
            adam_beta1: p.adam_beta1,
            adam_beta2: p.adam_beta2,
            weight_decay: p.weight_decay,
            warmup_steps: p.warmup_steps,
            init_checkpoint: p.init_checkpoint.clone(),
            sequence_length: p.sequence_length,
            checkpoint_every: p.checkpoint_every,
            seed: self.seed,
            masking: p.masking,
        }
    }

    pub fn finetune_config(&self, num_classes: usize) -> FinetuneConfig {
        let f = &self.finetune;
        FinetuneConfig {
            learning_rate: f.learning_rate,
            batch_size: f.batch_size,
            max_epochs: f.max_epochs,
            patience: f.patience,
            warmup_steps: f.warmup_steps,
            num_classes,
            seed: self.seed,
            adam_beta1: f.adam_beta1,
            adam_beta2: f.adam_beta2,
            weight_decay: f.weight_decay,
            max_sequence_length: f.max_sequence_length,
        }
    }

    pub fn task_name(&self) -> &'static str {
        match self.task {
            Task::Chambers => "chambers",
            Task::Matieres => "matieres",
        }
    }

    pub fn model_name(&self) -> String {
        self.gridsearch.model_name.clone().unwrap_or_else(|| {
            let mut name = self.model.profile.clone();
            if let Some(first) = name.get_mut(..1) {
                first.make_ascii_uppercase();
            }
            name
        })
    }
}
