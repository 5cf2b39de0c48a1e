//! Pre-training, fine-tuning, and the pieces they share: masking, the
//! learning-rate schedule and the optimizer.
//!
//! Every random draw comes from a stream derived from the run seed and the
//! step, so runs are reproducible and resumable.

mod batch;
mod early_stopping;
mod finetune;
mod grid;
mod history;
mod masking;
mod optimizer;
mod pretrain;
mod schedule;

pub use early_stopping::{EarlyStopping, StopDecision};
pub use finetune::{
    accuracy, encode_examples, finetune, predict, with_classifier, EncodedExample, FinetuneConfig, FinetuneData,
    FinetuneOutcome, FinetuneRecord,
};
pub use grid::{grid_search, select_rate, GridRun, GridSearchResult, DEFAULT_GRID};
pub use history::{read_history_csv, write_history_csv, HistoryRow};
pub use masking::{is_eligible, mask_batch, MaskedBatch, MaskingPolicy};
pub use optimizer::{adam_step, adam_update_slice, AdamConfig, OptimizerState};
pub use pretrain::{
    pretrain, pretrain_from, smoothed_loss, PretrainConfig, PretrainCorpus, PretrainRecord, PretrainRun,
    PretrainState,
};
pub use schedule::{clamped_warmup_lr, linear_warmup_lr};

// Stream tags under the run seed.
const TAG_INIT: u64 = 1;
const TAG_SHUFFLE: u64 = 2;
const TAG_DROPOUT: u64 = 3;
const TAG_CLASSIFIER: u64 = 4;
