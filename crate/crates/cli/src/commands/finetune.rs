//! `finetune` and `gridsearch`.

use std::path::Path;

use legal_lm::corpus::ClassList;
use legal_lm::encoder::{Checkpoint, ModelParams, TokenizerFiles};
use legal_lm::eval::{format_rate, render_results_table, ResultRow};
use legal_lm::tokenizer::render_files;
use legal_lm::training::{
    accuracy, finetune, grid_search, write_history_csv, FinetuneConfig, FinetuneData, HistoryRow,
};
use log::info;
use serde::Serialize;
use serde_json::json;

use super::{build_time, checkpoint_tokenizer, create_dir, load_checkpoint, load_splits, write_json, write_text};
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::layout::Layout;

struct Setup {
    start: ModelParams,
    tokenizer_files: TokenizerFiles,
    classes: ClassList,
    data: FinetuneData,
    config: FinetuneConfig,
}

fn setup(cfg: &PipelineConfig, layout: &Layout) -> Result<Setup> {
    let path = cfg.finetune.checkpoint.clone().unwrap_or_else(|| layout.pretrain_final());
    let ck = load_checkpoint(&path)?;
    let tokenizer = checkpoint_tokenizer(&ck, layout)?;
    if tokenizer.vocab_size() != ck.params.config.vocab_size {
        return Err(legal_lm::Error::ConfigMismatch(format!(
            "tokenizer has {} tokens, {} expects {}",
            tokenizer.vocab_size(),
            path.display(),
            ck.params.config.vocab_size
        ))
        .into());
    }
    let (classes, split) = load_splits(layout)?;
    let config = cfg.finetune_config(classes.len());
    config.validate()?;
    let max_len = config.max_sequence_length.min(ck.params.config.max_positions);
    let data = FinetuneData::encode(&split, &tokenizer, max_len)?;
    let (vocab_json, merges_txt) = render_files(&tokenizer)?;
    info!(
        "fine-tuning {} from {} on {} / {} / {} examples",
        cfg.task_name(),
        path.display(),
        data.train.len(),
        data.dev.len(),
        data.test.len()
    );
    Ok(Setup {
        start: ck.params,
        tokenizer_files: TokenizerFiles { vocab_json, merges_txt },
        classes,
        data,
        config,
    })
}

fn save_model(
    params: &ModelParams,
    setup: &Setup,
    seed: u64,
    extra: serde_json::Value,
    path: &Path,
) -> Result<()> {
    let mut ck = Checkpoint::new(params.clone());
    ck.tokenizer = Some(setup.tokenizer_files.clone());
    ck.metadata.seed = seed;
    ck.metadata.created_unix = build_time();
    ck.metadata.extra.insert("classes".into(), json!(setup.classes.names));
    if let serde_json::Value::Object(map) = extra {
        ck.metadata.extra.extend(map);
    }
    ck.save(path)?;
    Ok(())
}

fn test_accuracy(params: &ModelParams, data: &FinetuneData) -> Result<Option<f64>> {
    if data.test.is_empty() {
        return Ok(None);
    }
    Ok(Some(accuracy(params, &data.test)?))
}

#[derive(Serialize)]
struct FinetuneSummary {
    learning_rate: f64,
    best_epoch: usize,
    dev_accuracy: f64,
    test_accuracy: Option<f64>,
    epochs_run: usize,
    stopped_early: bool,
}

pub fn run(cfg: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&cfg.paths.output_dir);
    let setup = setup(cfg, &layout)?;
    let outcome = finetune(&setup.start, &setup.data, &setup.config)?;
    let out = layout.finetune();
    create_dir(&out)?;
    let rows: Vec<HistoryRow> = outcome.history.iter().map(HistoryRow::from).collect();
    write_history_csv(&out.join("history.csv"), &rows)?;
    let test = test_accuracy(&outcome.params, &setup.data)?;
    let summary = FinetuneSummary {
        learning_rate: setup.config.learning_rate,
        best_epoch: outcome.best_epoch,
        dev_accuracy: outcome.best_dev_accuracy,
        test_accuracy: test,
        epochs_run: outcome.history.len(),
        stopped_early: outcome.stopped_early,
    };
    save_model(
        &outcome.params,
        &setup,
        cfg.seed,
        json!({"stage": "finetune", "learning_rate": summary.learning_rate, "best_epoch": summary.best_epoch, "dev_accuracy": summary.dev_accuracy}),
        &out.join("best.ckpt"),
    )?;
    write_json(&out.join("summary.json"), &summary)?;
    if outcome.stopped_early {
        info!("early stop after epoch {}", outcome.history.len());
    }
    println!(
        "best dev accuracy {:.4} at epoch {}{}",
        outcome.best_dev_accuracy,
        outcome.best_epoch,
        test.map(|t| format!("; test accuracy {t:.4}")).unwrap_or_default()
    );
    Ok(())
}

#[derive(Serialize)]
struct GridSummary {
    model: String,
    selected_learning_rate: f64,
    dev_accuracy: f64,
    test_accuracy: Option<f64>,
    runs: Vec<GridRunSummary>,
}

#[derive(Serialize)]
struct GridRunSummary {
    learning_rate: f64,
    dev_accuracy: f64,
    best_epoch: usize,
    epochs_run: usize,
}

pub fn run_grid(cfg: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&cfg.paths.output_dir);
    let setup = setup(cfg, &layout)?;
    let result = grid_search(&setup.start, &setup.data, &cfg.gridsearch.rates, &setup.config)?;
    let out = layout.gridsearch();
    create_dir(&out)?;
    for run in &result.runs {
        let dir = out.join(format!("lr-{}", format_rate(run.learning_rate)));
        create_dir(&dir)?;
        let rows: Vec<HistoryRow> = run.history.iter().map(HistoryRow::from).collect();
        write_history_csv(&dir.join("history.csv"), &rows)?;
        info!(
            "lr {}: dev accuracy {:.4} (epoch {})",
            format_rate(run.learning_rate),
            run.dev_accuracy,
            run.best_epoch
        );
    }
    let test = test_accuracy(&result.selected_params, &setup.data)?;
    save_model(
        &result.selected_params,
        &setup,
        cfg.seed,
        json!({"stage": "gridsearch", "learning_rate": result.selected_rate(), "dev_accuracy": result.selected_dev_accuracy()}),
        &out.join("best.ckpt"),
    )?;
    let model = cfg.model_name();
    let row = ResultRow::from_grid(model.clone(), &result, test.unwrap_or(f64::NAN));
    let table = render_results_table(&[row])?;
    write_text(&out.join("results_table.csv"), &table.csv)?;
    write_text(&out.join("results_table.txt"), &table.text)?;
    write_json(
        &out.join("results.json"),
        &GridSummary {
            model,
            selected_learning_rate: result.selected_rate(),
            dev_accuracy: result.selected_dev_accuracy(),
            test_accuracy: test,
            runs: result
                .runs
                .iter()
                .map(|r| GridRunSummary {
                    learning_rate: r.learning_rate,
                    dev_accuracy: r.dev_accuracy,
                    best_epoch: r.best_epoch,
                    epochs_run: r.history.len(),
                })
                .collect(),
        },
    )?;
    for run in &result.runs {
        println!(
            "lr {} | dev {}",
            format_rate(run.learning_rate),
            legal_lm::eval::format_percent(run.dev_accuracy)
        );
    }
    print!("{}", table.text);
    println!("selected learning rate {}", format_rate(result.selected_rate()));
    Ok(())
}
