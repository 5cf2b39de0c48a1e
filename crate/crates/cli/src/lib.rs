//! The `legal-lm` command line: one pipeline config, six subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod layout;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use legal_lm::corpus::Task;

pub use config::PipelineConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "legal-lm", version, about = "Legal-text language model pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Pipeline config (TOML). Built-in defaults apply when omitted.
    #[arg(long, short = 'c', global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Labeled pleadings (JSONL file or directory).
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_parser = parse_task)]
    pub task: Option<Task>,
    /// tiny, mini, small, base or custom.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    /// More log output (repeatable).
    #[arg(long, short = 'v', global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only warnings and errors.
    #[arg(long, short = 'q', global = true)]
    pub quiet: bool,
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    match s {
        "chambers" => Ok(Task::Chambers),
        "matieres" => Ok(Task::Matieres),
        other => Err(format!("unknown task {other:?}; expected chambers or matieres")),
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean, extract, filter and split the labeled corpus.
    Prepare,
    /// Train the byte-level BPE tokenizer.
    TrainTokenizer(TokenizerArgs),
    /// Masked-language-model pre-training.
    Pretrain(PretrainArgs),
    /// Fine-tune a classifier at one learning rate.
    Finetune(FinetuneArgs),
    /// Fine-tune once per learning rate and keep the best on dev.
    Gridsearch(GridArgs),
    /// Score a model or a prediction dump on the test split.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct TokenizerArgs {
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long, value_enum)]
    pub corpus_subset: Option<config::CorpusSubset>,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    /// Continue training an existing model instead of starting from random
    /// weights.
    #[arg(long)]
    pub init_checkpoint: Option<PathBuf>,
    /// Pre-train on the pleadings only, or on the full corpus.
    #[arg(long, value_enum)]
    pub corpus_subset: Option<config::CorpusSubset>,
    /// Continue from the latest checkpoint in the output directory.
    #[arg(long)]
    pub resume: bool,
    #[arg(long)]
    pub total_steps: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Comma-separated learning rates.
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, conflicts_with = "predictions")]
    pub checkpoint: Option<PathBuf>,
    /// CSV `doc_id,true_label,predicted_label`.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = &g.output_dir {
        cfg.paths.output_dir = v.clone();
    }
    if let Some(v) = &g.corpus {
        cfg.paths.corpus = Some(v.clone());
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    if let Some(v) = g.task {
        cfg.task = v;
    }
    if let Some(v) = &g.profile {
        cfg.model.profile = v.clone();
    }
    match &cli.command {
        Command::Prepare => {}
        Command::TrainTokenizer(a) => {
            if let Some(v) = a.vocab_size {
                cfg.tokenizer.vocab_size = v;
            }
            if let Some(v) = a.corpus_subset {
                cfg.pretrain.corpus_subset = v;
            }
        }
        Command::Pretrain(a) => {
            if let Some(v) = &a.init_checkpoint {
                cfg.pretrain.init_checkpoint = Some(v.clone());
            }
            if let Some(v) = a.corpus_subset {
                cfg.pretrain.corpus_subset = v;
            }
            if let Some(v) = a.total_steps {
                cfg.pretrain.total_steps = v;
            }
        }
        Command::Finetune(a) => {
            if let Some(v) = &a.checkpoint {
                cfg.finetune.checkpoint = Some(v.clone());
            }
            if let Some(v) = a.learning_rate {
                cfg.finetune.learning_rate = v;
            }
        }
        Command::Gridsearch(a) => {
            if let Some(v) = &a.checkpoint {
                cfg.finetune.checkpoint = Some(v.clone());
            }
            if let Some(v) = &a.rates {
                cfg.gridsearch.rates = v.clone();
            }
        }
        Command::Evaluate(a) => {
            if let Some(v) = &a.checkpoint {
                cfg.evaluate.checkpoint = Some(v.clone());
                cfg.evaluate.predictions = None;
            }
            if let Some(v) = &a.predictions {
                cfg.evaluate.predictions = Some(v.clone());
            }
        }
    }
    Ok(cfg)
}

/// Resolves the config, logs it, and runs the subcommand.
pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    log::info!("resolved config:\n{}", cfg.to_toml());
    match &cli.command {
        Command::Prepare => commands::prepare::run(&cfg),
        Command::TrainTokenizer(_) => commands::tokenizer::run(&cfg),
        Command::Pretrain(a) => commands::pretrain::run(&cfg, a.resume),
        Command::Finetune(_) => commands::finetune::run(&cfg),
        Command::Gridsearch(_) => commands::finetune::run_grid(&cfg),
        Command::Evaluate(_) => commands::evaluate::run(&cfg),
    }
}
