//! Raw documents to labeled classification examples.

use std::collections::BTreeSet;

use log::info;

use super::{
    alors_que_text, clean_text, compact_labels, filter_rare_classes, label_counts, ClassList, LabeledExample,
    RawDocument, Task, CHAMBER_CLASSES,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCorpus {
    pub examples: Vec<LabeledExample>,
    pub classes: ClassList,
    pub unlabeled: usize,
    /// Documents without a usable `ALORS QUE` paragraph.
    pub without_alors_que: usize,
    /// Classes removed for having fewer than the minimum count.
    pub dropped_classes: Vec<(String, usize)>,
}

/// Chamber classes keep their fixed order with unexpected names appended;
/// subjects are sorted by name.
fn class_list(task: Task, labels: &BTreeSet<&str>) -> ClassList {
    match task {
        Task::Chambers => {
            let mut names: Vec<String> = CHAMBER_CLASSES.iter().map(|s| s.to_string()).collect();
            names.extend(
                labels
                    .iter()
                    .filter(|l| !CHAMBER_CLASSES.contains(l))
                    .map(|s| s.to_string()),
            );
            ClassList { names }
        }
        Task::Matieres => ClassList::new(labels.iter().copied()),
    }
}

/// Labels each document for `task`, reduces it to its cleaned `ALORS QUE`
/// text when `extract` is set (or the whole cleaned text otherwise), and
/// drops classes with fewer than `min_class_count` examples.
pub fn prepare_examples(
    docs: &[RawDocument],
    task: Task,
    min_class_count: usize,
    extract: bool,
) -> Result<PreparedCorpus> {
    let labels: BTreeSet<&str> = docs.iter().filter_map(|d| task.label_of(d)).collect();
    let all_classes = class_list(task, &labels);
    let mut unlabeled = 0;
    let mut without_alors_que = 0;
    let mut examples = Vec::new();
    for doc in docs {
        let Some(label) = task.label_of(doc) else {
            unlabeled += 1;
            continue;
        };
        let text = if extract {
            alors_que_text(doc).map(|t| clean_text(&t))
        } else {
            Some(clean_text(&doc.text))
        };
        match text {
            Some(text) if !text.is_empty() => examples.push(LabeledExample {
                doc_id: doc.doc_id.clone(),
                text,
                label: all_classes.index_of(label).expect("label collected above"),
            }),
            _ => without_alors_que += 1,
        }
    }
    if examples.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no labeled documents with text ({unlabeled} unlabeled, {without_alors_que} without ALORS QUE)"
        )));
    }
    let counts = label_counts(&examples);
    let dropped_classes: Vec<(String, usize)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0 && c < min_class_count)
        .map(|(i, &c)| (all_classes.names[i].clone(), c))
        .collect();
    let kept = filter_rare_classes(&examples, min_class_count)?;
    let (examples, classes) = compact_labels(&kept, &all_classes);
    info!(
        "prepared {} examples in {} classes; skipped {unlabeled} unlabeled and {without_alors_que} without ALORS QUE; dropped {} rare classes",
        examples.len(),
        classes.len(),
        dropped_classes.len()
    );
    Ok(PreparedCorpus {
        examples,
        classes,
        unlabeled,
        without_alors_que,
        dropped_classes,
    })
}
