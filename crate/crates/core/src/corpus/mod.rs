//! Raw document ingestion, cleaning, `ALORS QUE` extraction, rare-class
//! filtering and deterministic splits.

mod clean;
mod extract;
mod io;
mod prepare;
mod split;
mod stats;

use serde::{Deserialize, Serialize};

pub use clean::{clean_bytes, clean_text, is_retained_char};
pub use extract::{alors_que_text, extract_alors_que, is_alors_que_paragraph, paragraphs};
pub use io::{read_corpus, read_examples_jsonl, write_examples_jsonl, ExampleRecord};
pub use prepare::{prepare_examples, PreparedCorpus};
pub use split::{split_dataset, DatasetSplit, SplitManifest, SplitSpec, SubsetCounts};
pub use stats::{corpus_stats, SupportTable};

use crate::error::{Error, Result};

/// One input document. Labels are optional because pre-training text carries
/// none.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub doc_id: String,
    pub text: String,
    #[serde(default)]
    pub chamber_label: Option<String>,
    #[serde(default)]
    pub matiere_label: Option<String>,
}

/// The two classification tasks defined over pleadings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Chamber and section of the court (8 classes).
    Chambers,
    /// Legal subject ("matière").
    Matieres,
}

impl Task {
    pub fn label_of<'a>(&self, doc: &'a RawDocument) -> Option<&'a str> {
        match self {
            Task::Chambers => doc.chamber_label.as_deref(),
            Task::Matieres => doc.matiere_label.as_deref(),
        }
    }
}

/// The eight chamber/section classes, in the court's usual order.
pub const CHAMBER_CLASSES: [&str; 8] = [
    "CO",
    "C1_Section1",
    "C1_Section2",
    "C2_Section1",
    "C2_Section2",
    "C2_Section3",
    "C3_Section1",
    "C3_Section2",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub doc_id: String,
    pub text: String,
    pub label: usize,
}

/// Ordered class names; a label is an index into this list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassList {
    pub names: Vec<String>,
}

impl ClassList {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Self {
            names: names.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }
}

impl LabeledExample {
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if self.text.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "example {} has empty text",
                self.doc_id
            )));
        }
        if self.label >= num_classes {
            return Err(Error::OutOfRange(format!(
                "example {} has label {} but the task has {} classes",
                self.doc_id, self.label, num_classes
            )));
        }
        Ok(())
    }
}

/// Drops every example whose class has fewer than `min_count` examples.
/// Order is preserved.
pub fn filter_rare_classes(
    examples: &[LabeledExample],
    min_count: usize,
) -> Result<Vec<LabeledExample>> {
    if min_count == 0 {
        return Err(Error::InvalidConfig("min_count must be at least 1".into()));
    }
    let counts = label_counts(examples);
    let kept: Vec<LabeledExample> = examples
        .iter()
        .filter(|e| counts[e.label] >= min_count)
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no class has at least {min_count} examples"
        )));
    }
    Ok(kept)
}

/// Renumbers labels so the classes still present are contiguous, keeping
/// their relative order. Returns the new examples and class list.
pub fn compact_labels(
    examples: &[LabeledExample],
    classes: &ClassList,
) -> (Vec<LabeledExample>, ClassList) {
    let counts = label_counts(examples);
    let mut remap = vec![usize::MAX; counts.len()];
    let mut names = Vec::new();
    for (old, &c) in counts.iter().enumerate() {
        if c > 0 {
            remap[old] = names.len();
            names.push(
                classes
                    .name(old)
                    .map(str::to_owned)
                    .unwrap_or_else(|| old.to_string()),
            );
        }
    }
    let examples = examples
        .iter()
        .map(|e| LabeledExample {
            label: remap[e.label],
            ..e.clone()
        })
        .collect();
    (examples, ClassList { names })
}

pub(crate) fn label_counts(examples: &[LabeledExample]) -> Vec<usize> {
    let n = examples.iter().map(|e| e.label + 1).max().unwrap_or(0);
    let mut counts = vec![0usize; n];
    for e in examples {
        counts[e.label] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(id: usize, label: usize) -> LabeledExample {
        LabeledExample {
            doc_id: format!("d{id}"),
            text: "ALORS QUE".into(),
            label,
        }
    }

    #[test]
    fn filter_drops_the_three_recessive_subjects() {
        // 151 subjects; the last three have 2, 1 and 1 examples.
        let mut examples = Vec::new();
        let mut id = 0;
        for class in 0..151 {
            let n = match class {
                148 => 2,
                149 | 150 => 1,
                c => 3 + c % 7,
            };
            for _ in 0..n {
                examples.push(ex(id, class));
                id += 1;
            }
        }
        let kept = filter_rare_classes(&examples, 3).unwrap();
        let counts = label_counts(&kept);
        let present = counts.iter().filter(|&&c| c > 0).count();
        assert_eq!(present, 148);
        assert!(kept.iter().all(|e| e.label < 148));
    }

    #[test]
    fn filter_is_noop_when_every_class_is_large_enough() {
        let examples: Vec<_> = (0..12).map(|i| ex(i, i % 3)).collect();
        assert_eq!(filter_rare_classes(&examples, 4).unwrap(), examples);
    }

    #[test]
    fn filter_keeps_only_the_frequent_class() {
        let mut examples: Vec<_> = (0..5).map(|i| ex(i, 0)).collect();
        examples.insert(2, ex(10, 1));
        examples.push(ex(11, 1));
        let kept = filter_rare_classes(&examples, 3).unwrap();
        assert_eq!(kept.len(), 5);
        assert!(kept.iter().all(|e| e.label == 0));
        let ids: Vec<_> = kept.iter().map(|e| e.doc_id.as_str()).collect();
        assert_eq!(ids, ["d0", "d1", "d2", "d3", "d4"]);
    }

    #[test]
    fn filter_everything_rare_is_an_error() {
        let examples = vec![ex(0, 0), ex(1, 1)];
        assert!(matches!(
            filter_rare_classes(&examples, 2),
            Err(Error::EmptyDataset(_))
        ));
        assert!(filter_rare_classes(&examples, 0).is_err());
    }

    #[test]
    fn compact_labels_renumbers() {
        let classes = ClassList::new(["a", "b", "c"]);
        let examples = vec![ex(0, 2), ex(1, 0), ex(2, 2)];
        let (compact, names) = compact_labels(&examples, &classes);
        assert_eq!(names.names, ["a", "c"]);
        let labels: Vec<_> = compact.iter().map(|e| e.label).collect();
        assert_eq!(labels, [1, 0, 1]);
    }

    #[test]
    fn labeled_example_validation() {
        assert!(ex(0, 2).validate(3).is_ok());
        assert!(ex(0, 3).validate(3).is_err());
        let empty = LabeledExample {
            text: String::new(),
            ..ex(0, 0)
        };
        assert!(empty.validate(3).is_err());
    }
}
