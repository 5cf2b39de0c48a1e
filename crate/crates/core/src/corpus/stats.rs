use serde::{Deserialize, Serialize};

use super::{label_counts, ClassList, LabeledExample};

/// Class → support, sorted by count descending (ties by class name).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportTable {
    pub rows: Vec<(String, usize)>,
}

impl SupportTable {
    pub fn from_counts<S: Into<String>>(counts: impl IntoIterator<Item = (S, usize)>) -> Self {
        let mut rows: Vec<(String, usize)> =
            counts.into_iter().map(|(n, c)| (n.into(), c)).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self { rows }
    }

    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.1).sum()
    }

    pub fn get(&self, class: &str) -> Option<usize> {
        self.rows.iter().find(|r| r.0 == class).map(|r| r.1)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Plain-text rendering, one `class<TAB>count` per line.
    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.0.len()).max().unwrap_or(5).max(5);
        let mut out = format!("{:<width$}  support\n", "class");
        for (name, count) in &self.rows {
            out.push_str(&format!("{name:<width$}  {count}\n"));
        }
        out
    }
}

/// Per-class support of a labeled corpus. Classes with no examples are
/// omitted.
pub fn corpus_stats(examples: &[LabeledExample], classes: &ClassList) -> SupportTable {
    let counts = label_counts(examples);
    SupportTable::from_counts(
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| {
                (
                    classes
                        .name(i)
                        .map(str::to_owned)
                        .unwrap_or_else(|| i.to_string()),
                    c,
                )
            }),
    )
}
