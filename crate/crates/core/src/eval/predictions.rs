//! Prediction dumps: CSV `doc_id,true_label,predicted_label` with class
//! names, so outputs of other systems can be scored the same way.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::ClassList;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub doc_id: String,
    pub true_label: usize,
    pub predicted_label: usize,
}

#[derive(Serialize, Deserialize)]
struct Row {
    doc_id: String,
    true_label: String,
    predicted_label: String,
}

pub fn write_predictions_csv(path: &Path, predictions: &[Prediction], classes: &ClassList) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for p in predictions {
        let name = |i: usize| {
            classes
                .name(i)
                .map(str::to_owned)
                .ok_or_else(|| Error::OutOfRange(format!("{}: class {i} has no name", p.doc_id)))
        };
        w.serialize(Row {
            doc_id: p.doc_id.clone(),
            true_label: name(p.true_label)?,
            predicted_label: name(p.predicted_label)?,
        })
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a prediction dump, resolving class names through `classes`.
pub fn read_predictions_csv(path: &Path, classes: &ClassList) -> Result<Vec<Prediction>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let resolve = |name: &str| {
            classes.index_of(name).ok_or_else(|| Error::Parse {
                file: path.display().to_string(),
                line: i + 2,
                message: format!("unknown class {name:?}"),
            })
        };
        out.push(Prediction {
            true_label: resolve(&row.true_label)?,
            predicted_label: resolve(&row.predicted_label)?,
            doc_id: row.doc_id,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_unknown_class() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let classes = ClassList::new(["CO", "C1_Section1"]);
        let preds = vec![
            Prediction {
                doc_id: "d,1".into(),
                true_label: 0,
                predicted_label: 1,
            },
            Prediction {
                doc_id: "d2".into(),
                true_label: 1,
                predicted_label: 1,
            },
        ];
        write_predictions_csv(&path, &preds, &classes).unwrap();
        assert_eq!(read_predictions_csv(&path, &classes).unwrap(), preds);

        std::fs::write(&path, "doc_id,true_label,predicted_label\nx,CO,CO\ny,CO,C9\n").unwrap();
        match read_predictions_csv(&path, &classes) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("C9"));
            }
            other => panic!("{other:?}"),
        }
    }
}
