//! `evaluate`: report, confusion matrix and figures for the test split.

use legal_lm::eval::{emit_plots, evaluate, read_predictions_csv, write_predictions_csv, Prediction};
use legal_lm::training::{predict, encode_examples};
use log::info;
use serde_json::json;

use super::{checkpoint_tokenizer, create_dir, load_checkpoint, load_manifest, load_splits, require, write_json};
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::layout::Layout;

pub fn run(cfg: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&cfg.paths.output_dir);
    let manifest = load_manifest(&layout)?;
    let classes = manifest.classes.clone();
    let out = layout.evaluate();

    let predictions: Vec<Prediction> = match &cfg.evaluate.predictions {
        Some(path) => {
            require(path, "predictions file")?;
            info!("scoring predictions from {}", path.display());
            read_predictions_csv(path, &classes)?
        }
        None => {
            let path = cfg.evaluate.checkpoint.clone().unwrap_or_else(|| {
                let grid = layout.gridsearch().join("best.ckpt");
                if grid.exists() {
                    grid
                } else {
                    layout.finetune().join("best.ckpt")
                }
            });
            let ck = load_checkpoint(&path)?;
            let outputs = ck.params.classifier.as_ref().map(|c| c.num_classes());
            if outputs != Some(classes.len()) {
                return Err(legal_lm::Error::ConfigMismatch(format!(
                    "{} has {:?} classifier outputs, the prepared task has {} classes",
                    path.display(),
                    outputs,
                    classes.len()
                ))
                .into());
            }
            let tokenizer = checkpoint_tokenizer(&ck, &layout)?;
            let (_, split) = load_splits(&layout)?;
            let max_len = cfg.finetune.max_sequence_length.min(ck.params.config.max_positions);
            let test = encode_examples(&split.test, &tokenizer, max_len)?;
            info!("scoring {} on {} test examples", path.display(), test.len());
            let predicted = predict(&ck.params, &test)?;
            let predictions: Vec<Prediction> = test
                .iter()
                .zip(predicted)
                .map(|(e, p)| Prediction {
                    doc_id: e.doc_id.clone(),
                    true_label: e.label,
                    predicted_label: p,
                })
                .collect();
            create_dir(&out)?;
            write_predictions_csv(&out.join("predictions.csv"), &predictions, &classes)?;
            predictions
        }
    };

    let labels: Vec<usize> = predictions.iter().map(|p| p.true_label).collect();
    let predicted: Vec<usize> = predictions.iter().map(|p| p.predicted_label).collect();
    let (report, matrix) = evaluate(&predicted, &labels, classes.len())?;
    create_dir(&out)?;
    write_json(
        &out.join("report.json"),
        &json!({
            "classes": classes.names,
            "report": report,
            "confusion": matrix.counts,
        }),
    )?;
    emit_plots(&report, &matrix, &manifest.support, &classes, &out)?;
    println!(
        "accuracy {:.4} ({} / {}); macro F1 {:.4}",
        report.accuracy, report.correct, report.total, report.macro_f1
    );
    Ok(())
}
