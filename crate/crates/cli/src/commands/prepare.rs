//! `prepare`: labeled corpus to train/dev/test JSONL plus a manifest.

use legal_lm::corpus::{
    corpus_stats, prepare_examples, read_corpus, split_dataset, write_examples_jsonl, ClassList, SplitManifest,
    SupportTable, Task,
};
use log::info;
use serde::{Deserialize, Serialize};

use super::{create_dir, require, write_json, write_text};
use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::layout::Layout;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepareManifest {
    pub task: Task,
    pub classes: ClassList,
    pub split: SplitManifest,
    /// Support of every kept class over the whole prepared corpus.
    pub support: SupportTable,
    pub dropped_classes: Vec<(String, usize)>,
    pub unlabeled_documents: usize,
    pub documents_without_alors_que: usize,
}

pub fn run(cfg: &PipelineConfig) -> Result<()> {
    let corpus = cfg
        .paths
        .corpus
        .as_ref()
        .ok_or_else(|| CliError::missing("paths.corpus", "no corpus configured (use --corpus)"))?;
    require(corpus, "corpus")?;
    let docs = read_corpus(corpus)?;
    info!("read {} documents from {}", docs.len(), corpus.display());
    let prepared = prepare_examples(&docs, cfg.task, cfg.prepare.min_class_count, cfg.prepare.extract_alors_que)?;
    for (name, count) in &prepared.dropped_classes {
        info!("dropped class {name:?} with {count} examples");
    }
    let spec = cfg.split_spec();
    let split = split_dataset(&prepared.examples, &spec)?;

    let layout = Layout::new(&cfg.paths.output_dir);
    create_dir(&layout.prepared())?;
    for (name, subset) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
        write_examples_jsonl(&layout.split_file(name), subset, &prepared.classes)?;
    }
    let support = corpus_stats(&prepared.examples, &prepared.classes);
    let manifest = PrepareManifest {
        task: cfg.task,
        classes: prepared.classes.clone(),
        split: split.manifest(spec, &prepared.classes),
        support: support.clone(),
        dropped_classes: prepared.dropped_classes,
        unlabeled_documents: prepared.unlabeled,
        documents_without_alors_que: prepared.without_alors_que,
    };
    write_json(&layout.manifest(), &manifest)?;
    let table = support.render();
    write_text(&layout.prepared().join("support.txt"), &table)?;
    info!(
        "split {} / {} / {} (train / dev / test) into {}",
        split.train.len(),
        split.dev.len(),
        split.test.len(),
        layout.prepared().display()
    );
    print!("{table}");
    Ok(())
}
