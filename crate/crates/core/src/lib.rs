//! Building blocks for training small BERT-style encoders on legal text.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! - [`corpus`]: cleaning, `ALORS QUE` paragraph extraction, rare-class
//!   filtering and deterministic train/dev/test splits.
//! - [`tokenizer`]: byte-level BPE training, encoding and the
//!   `vocab.json` / `merges.txt` file pair.
//! - [`encoder`]: a post-layer-norm transformer encoder with hand-written
//!   backward passes, the masked-language-model head and the
//!   classification head, plus the binary checkpoint container.
//! - [`training`]: masking, the warmup schedule, Adam with decoupled weight
//!   decay, pre-training, fine-tuning with early stopping and learning-rate
//!   grid search.
//! - [`eval`]: classification reports, confusion matrices, result tables
//!   and plot data.

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod rng;
pub mod tokenizer;
pub mod training;

pub use error::{Error, Result};
