//! `train-tokenizer`: byte-level BPE over the pre-training text.

use legal_lm::tokenizer::{save_tokenizer, train_bpe};
use log::info;

use super::{create_dir, pretraining_texts};
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::layout::Layout;

pub fn run(cfg: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&cfg.paths.output_dir);
    let texts = pretraining_texts(cfg, &layout)?;
    info!(
        "training tokenizer on {} documents: vocab_size {}, min_frequency {}",
        texts.len(),
        cfg.tokenizer.vocab_size,
        cfg.tokenizer.min_frequency
    );
    let model = train_bpe(&texts, cfg.tokenizer.vocab_size, cfg.tokenizer.min_frequency)?
        .with_max_sequence_length(cfg.tokenizer.max_sequence_length);
    create_dir(&layout.tokenizer())?;
    save_tokenizer(&model, &layout.tokenizer())?;
    println!(
        "vocabulary size {}, merges {}",
        model.vocab_size(),
        model.merges().len()
    );
    Ok(())
}
