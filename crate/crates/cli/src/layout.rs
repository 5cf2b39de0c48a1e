//! Where each subcommand reads and writes under the output directory.

use std::path::{Path, PathBuf};

pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf() }
    }

    pub fn prepared(&self) -> PathBuf {
        self.root.join("prepared")
    }

    pub fn split_file(&self, subset: &str) -> PathBuf {
        self.prepared().join(format!("{subset}.jsonl"))
    }

    pub fn manifest(&self) -> PathBuf {
        self.prepared().join("manifest.json")
    }

    pub fn tokenizer(&self) -> PathBuf {
        self.root.join("tokenizer")
    }

    pub fn pretrain(&self) -> PathBuf {
        self.root.join("pretrain")
    }

    pub fn pretrain_checkpoint(&self, step: u64) -> PathBuf {
        self.pretrain().join(format!("checkpoint-{step:08}.ckpt"))
    }

    pub fn pretrain_final(&self) -> PathBuf {
        self.pretrain().join("final.ckpt")
    }

    pub fn finetune(&self) -> PathBuf {
        self.root.join("finetune")
    }

    pub fn gridsearch(&self) -> PathBuf {
        self.root.join("gridsearch")
    }

    pub fn evaluate(&self) -> PathBuf {
        self.root.join("evaluate")
    }

    /// Checkpoints in the pre-training directory as (step, path), ascending.
    pub fn pretrain_checkpoints(&self) -> Vec<(u64, PathBuf)> {
        let Ok(entries) = std::fs::read_dir(self.pretrain()) else {
            return Vec::new();
        };
        let mut found: Vec<(u64, PathBuf)> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                let step = name.strip_prefix("checkpoint-")?.strip_suffix(".ckpt")?.parse().ok()?;
                Some((step, e.path()))
            })
            .collect();
        found.sort();
        found
    }
}
