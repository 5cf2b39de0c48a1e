use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassList, LabeledExample, RawDocument};
use crate::error::{Error, Result};

/// Reads a corpus from either a directory (one UTF-8 document per file,
/// `doc_id` = file name without extension, no labels) or a JSON-lines file
/// with `doc_id`, `text`, `chamber_label`, `matiere_label`.
pub fn read_corpus(path: &Path) -> Result<Vec<RawDocument>> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let docs = if meta.is_dir() {
        read_directory(path)?
    } else {
        read_jsonl(path)?
    };
    let mut seen = HashSet::new();
    for d in &docs {
        if !seen.insert(d.doc_id.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "duplicate doc_id {:?} in {}",
                d.doc_id,
                path.display()
            )));
        }
    }
    Ok(docs)
}

fn read_directory(dir: &Path) -> Result<Vec<RawDocument>> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            let text = String::from_utf8(bytes)
                .map_err(|e| Error::Parse {
                    file: p.display().to_string(),
                    line: 0,
                    message: e.to_string(),
                })?;
            Ok(RawDocument {
                doc_id: p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                text,
                chamber_label: None,
                matiere_label: None,
            })
        })
        .collect()
}

fn read_jsonl(path: &Path) -> Result<Vec<RawDocument>> {
    parse_jsonl(path)
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            file: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            file: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Line format of `train.jsonl` / `dev.jsonl` / `test.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub doc_id: String,
    pub text: String,
    pub label: String,
    pub label_index: usize,
}

pub fn write_examples_jsonl(
    path: &Path,
    examples: &[LabeledExample],
    classes: &ClassList,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for e in examples {
        let record = ExampleRecord {
            doc_id: e.doc_id.clone(),
            text: e.text.clone(),
            label: classes.name(e.label).unwrap_or_default().to_owned(),
            label_index: e.label,
        };
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a split file, resolving label names through `classes`.
pub fn read_examples_jsonl(path: &Path, classes: &ClassList) -> Result<Vec<LabeledExample>> {
    let records: Vec<ExampleRecord> = parse_jsonl(path)?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let label = classes.index_of(&r.label).ok_or_else(|| Error::Parse {
                file: path.display().to_string(),
                line: i + 1,
                message: format!("unknown class {:?}", r.label),
            })?;
            Ok(LabeledExample {
                doc_id: r.doc_id,
                text: r.text,
                label,
            })
        })
        .collect()
}
