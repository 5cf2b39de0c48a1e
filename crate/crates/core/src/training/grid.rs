//! Learning-rate grid search over fine-tuning runs.

use rayon::prelude::*;

use super::finetune::{finetune, FinetuneConfig, FinetuneData, FinetuneRecord};
use crate::encoder::ModelParams;
use crate::error::{Error, Result};

/// The rates searched for classification fine-tuning.
pub const DEFAULT_GRID: [f64; 4] = [2e-5, 3e-5, 4e-5, 5e-5];

#[derive(Debug, Clone)]
pub struct GridRun {
    pub learning_rate: f64,
    pub dev_accuracy: f64,
    pub best_epoch: usize,
    pub history: Vec<FinetuneRecord>,
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    /// One run per rate, in the order given.
    pub runs: Vec<GridRun>,
    /// Index into `runs` of the selected rate.
    pub selected: usize,
    /// Best-epoch parameters of the selected run.
    pub selected_params: ModelParams,
}

impl GridSearchResult {
    pub fn selected_rate(&self) -> f64 {
        self.runs[self.selected].learning_rate
    }

    pub fn selected_dev_accuracy(&self) -> f64 {
        self.runs[self.selected].dev_accuracy
    }
}

/// Index of the highest accuracy; equal accuracies go to the smaller rate.
pub fn select_rate(runs: &[(f64, f64)]) -> Option<usize> {
    (0..runs.len()).reduce(|best, i| {
        let (rate, acc) = runs[i];
        let (best_rate, best_acc) = runs[best];
        if acc > best_acc || (acc == best_acc && rate < best_rate) {
            i
        } else {
            best
        }
    })
}

/// Fine-tunes once per rate with otherwise identical settings and seeds.
pub fn grid_search(
    params: &ModelParams,
    data: &FinetuneData,
    rates: &[f64],
    base: &FinetuneConfig,
) -> Result<GridSearchResult> {
    if rates.is_empty() {
        return Err(Error::InvalidConfig("grid search needs at least one learning rate".into()));
    }
    let outcomes = rates
        .par_iter()
        .map(|&learning_rate| {
            let config = FinetuneConfig {
                learning_rate,
                ..base.clone()
            };
            finetune(params, data, &config)
        })
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<(f64, f64)> = rates.iter().copied().zip(outcomes.iter().map(|o| o.best_dev_accuracy)).collect();
    let selected = select_rate(&scores).expect("non-empty");
    let runs = outcomes
        .iter()
        .zip(rates)
        .map(|(o, &learning_rate)| GridRun {
            learning_rate,
            dev_accuracy: o.best_dev_accuracy,
            best_epoch: o.best_epoch,
            history: o.history.clone(),
        })
        .collect();
    let selected_params = outcomes.into_iter().nth(selected).expect("selected index").params;
    Ok(GridSearchResult {
        runs,
        selected,
        selected_params,
    })
}
