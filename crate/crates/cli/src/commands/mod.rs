//! Subcommand implementations and the file plumbing they share.

pub mod evaluate;
pub mod finetune;
pub mod prepare;
pub mod pretrain;
pub mod tokenizer;

use std::fs;
use std::path::Path;

use legal_lm::corpus::{clean_text, read_corpus, read_examples_jsonl, ClassList, DatasetSplit, LabeledExample};
use legal_lm::encoder::{Checkpoint, TokenizerFiles};
use legal_lm::tokenizer::{load_tokenizer, parse_tokenizer_files, TokenizerModel};
use serde::Serialize;

use crate::config::{CorpusSubset, PipelineConfig};
use crate::error::{CliError, Result};
use crate::layout::Layout;

pub(crate) fn require(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::missing(path, format!("{what} not found")))
    }
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| legal_lm::Error::io(path, e).into())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(legal_lm::Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| legal_lm::Error::io(path, e).into())
}

pub(crate) fn load_manifest(layout: &Layout) -> Result<prepare::PrepareManifest> {
    let path = layout.manifest();
    require(&path, "prepared manifest (run `prepare` first)")?;
    let text = fs::read_to_string(&path).map_err(|e| legal_lm::Error::io(&path, e))?;
    Ok(serde_json::from_str(&text).map_err(legal_lm::Error::from)?)
}

/// Reads the prepare manifest's class list and the three splits.
pub(crate) fn load_splits(layout: &Layout) -> Result<(ClassList, DatasetSplit)> {
    let classes = load_manifest(layout)?.classes;
    let read = |subset: &str| -> Result<Vec<LabeledExample>> {
        let path = layout.split_file(subset);
        require(&path, "prepared split")?;
        Ok(read_examples_jsonl(&path, &classes)?)
    };
    let split = DatasetSplit {
        train: read("train")?,
        dev: read("dev")?,
        test: read("test")?,
    };
    Ok((classes, split))
}

/// Text for tokenizer training and pre-training.
pub(crate) fn pretraining_texts(cfg: &PipelineConfig, layout: &Layout) -> Result<Vec<String>> {
    let full = match (cfg.pretrain.corpus_subset, &cfg.paths.pretrain_corpus) {
        (CorpusSubset::Pleadings, _) => None,
        (_, Some(path)) => Some(path),
        (CorpusSubset::Full, None) => {
            return Err(legal_lm::Error::InvalidConfig(
                "corpus_subset = \"full\" needs paths.pretrain_corpus".into(),
            )
            .into())
        }
        (CorpusSubset::Auto, None) => None,
    };
    let texts: Vec<String> = match full {
        Some(path) => {
            require(path, "pre-training corpus")?;
            read_corpus(path)?.iter().map(|d| clean_text(&d.text)).collect()
        }
        None => {
            let path = layout.split_file("train");
            require(&path, "prepared training split (run `prepare` first)")?;
            let (_, split) = load_splits(layout)?;
            log::info!("using the {} training pleadings as pre-training text", split.train.len());
            split.train.into_iter().map(|e| e.text).collect()
        }
    };
    let texts: Vec<String> = texts.into_iter().filter(|t| !t.is_empty()).collect();
    if texts.is_empty() {
        return Err(legal_lm::Error::EmptyDataset("pre-training corpus has no text".into()).into());
    }
    Ok(texts)
}

pub(crate) fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    require(path, "checkpoint")?;
    Ok(Checkpoint::load(path)?)
}

/// The tokenizer stored in a checkpoint, else the one on disk.
pub(crate) fn checkpoint_tokenizer(ck: &Checkpoint, layout: &Layout) -> Result<TokenizerModel> {
    match &ck.tokenizer {
        Some(TokenizerFiles { vocab_json, merges_txt }) => Ok(parse_tokenizer_files(vocab_json, merges_txt)?),
        None => {
            require(&layout.tokenizer(), "tokenizer (run `train-tokenizer` first)")?;
            Ok(load_tokenizer(&layout.tokenizer())?)
        }
    }
}

/// `SOURCE_DATE_EPOCH` when set, so repeated runs stay byte-identical.
pub(crate) fn build_time() -> Option<u64> {
    std::env::var("SOURCE_DATE_EPOCH").ok()?.parse().ok()
}
