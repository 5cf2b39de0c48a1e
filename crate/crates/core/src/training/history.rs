//! Loss-history CSV: `step_or_epoch,train_loss,dev_accuracy,learning_rate`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::finetune::FinetuneRecord;
use super::pretrain::PretrainRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub step_or_epoch: u64,
    pub train_loss: f64,
    /// Empty for pre-training rows.
    pub dev_accuracy: Option<f64>,
    pub learning_rate: f64,
}

impl From<&PretrainRecord> for HistoryRow {
    fn from(r: &PretrainRecord) -> Self {
        Self {
            step_or_epoch: r.step,
            train_loss: r.loss,
            dev_accuracy: None,
            learning_rate: r.learning_rate,
        }
    }
}

impl From<&FinetuneRecord> for HistoryRow {
    fn from(r: &FinetuneRecord) -> Self {
        Self {
            step_or_epoch: r.epoch as u64,
            train_loss: r.train_loss,
            dev_accuracy: Some(r.dev_accuracy),
            learning_rate: r.learning_rate,
        }
    }
}

pub fn write_history_csv(path: &Path, rows: &[HistoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_history_csv(path: &Path) -> Result<Vec<HistoryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::csv(path, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let rows = vec![
            HistoryRow {
                step_or_epoch: 1,
                train_loss: 0.1 + 0.2,
                dev_accuracy: None,
                learning_rate: 1e-4 / 3.0,
            },
            HistoryRow {
                step_or_epoch: 2,
                train_loss: 2.0,
                dev_accuracy: Some(0.75),
                learning_rate: 0.0,
            },
        ];
        write_history_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step_or_epoch,train_loss,dev_accuracy,learning_rate\n"));
        assert_eq!(read_history_csv(&path).unwrap(), rows);
    }
}
