use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::Deserialize;

use super::{string_to_bytes, TokenizerModel, BASE_VOCAB, BYTE_OFFSET, NUM_SPECIAL, SPECIAL_TOKEN_STRINGS};
use crate::error::{Error, Result};

pub const VOCAB_FILE: &str = "vocab.json";
pub const MERGES_FILE: &str = "merges.txt";
pub const MERGES_HEADER: &str = "#version: 1";

/// Writes `vocab.json` (token → id, in id order) and `merges.txt` into `dir`.
pub fn save_tokenizer(model: &TokenizerModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (vocab, merges) = render_files(model)?;
    let vocab_path = dir.join(VOCAB_FILE);
    fs::write(&vocab_path, vocab).map_err(|e| Error::io(&vocab_path, e))?;
    let merges_path = dir.join(MERGES_FILE);
    fs::write(&merges_path, merges).map_err(|e| Error::io(&merges_path, e))?;
    Ok(())
}

/// The two file bodies, `(vocab.json, merges.txt)`.
pub fn render_files(model: &TokenizerModel) -> Result<(String, String)> {
    let mut vocab = String::from("{\n");
    let entries = model.vocabulary();
    for (i, (token, id)) in entries.iter().enumerate() {
        vocab.push_str("  ");
        vocab.push_str(&serde_json::to_string(token)?);
        vocab.push_str(&format!(": {id}"));
        vocab.push_str(if i + 1 < entries.len() { ",\n" } else { "\n" });
    }
    vocab.push_str("}\n");

    let mut merges = format!("{MERGES_HEADER}\n");
    for rule in model.merges() {
        let left = model.token_string(rule.left).ok_or(Error::UnknownTokenId(rule.left))?;
        let right = model.token_string(rule.right).ok_or(Error::UnknownTokenId(rule.right))?;
        merges.push_str(&format!("{left} {right}\n"));
    }
    Ok((vocab, merges))
}

/// Ordered key/value pairs, keeping duplicate keys so they can be reported.
struct Entries(Vec<(String, i64)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Entries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping token strings to integer ids")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, i64>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }
        d.deserialize_map(V)
    }
}

fn line_of(text: &str, token: &str) -> usize {
    let needle = serde_json::to_string(token).unwrap_or_default();
    text.lines()
        .position(|l| l.contains(&needle))
        .map_or(0, |i| i + 1)
}

/// Loads a tokenizer written by [`save_tokenizer`]. Every structural
/// problem is reported with the file and line it was found on.
pub fn load_tokenizer(dir: &Path) -> Result<TokenizerModel> {
    let vocab_path = dir.join(VOCAB_FILE);
    let merges_path = dir.join(MERGES_FILE);
    let vocab_text = fs::read_to_string(&vocab_path).map_err(|e| Error::io(&vocab_path, e))?;
    let merges_text = fs::read_to_string(&merges_path).map_err(|e| Error::io(&merges_path, e))?;
    parse_tokenizer_files(&vocab_text, &merges_text)
}

/// Parses the contents of a `vocab.json` / `merges.txt` pair, checking the
/// id layout.
pub fn parse_tokenizer_files(vocab_text: &str, merges_text: &str) -> Result<TokenizerModel> {
    let vocab_err = |line: usize, message: String| Error::Parse {
        file: VOCAB_FILE.into(),
        line,
        message,
    };
    let merges_err = |line: usize, message: String| Error::Parse {
        file: MERGES_FILE.into(),
        line,
        message,
    };

    let Entries(entries) = serde_json::from_str(vocab_text)
        .map_err(|e| vocab_err(e.line(), e.to_string()))?;
    let mut by_token: HashMap<&str, u32> = HashMap::new();
    let mut by_id: HashMap<u32, &str> = HashMap::new();
    for (token, id) in &entries {
        let id = u32::try_from(*id)
            .map_err(|_| vocab_err(line_of(vocab_text, token), format!("invalid id {id}")))?;
        if by_token.insert(token, id).is_some() {
            return Err(vocab_err(
                line_of(vocab_text, token),
                format!("duplicate token {token:?}"),
            ));
        }
        if let Some(prev) = by_id.insert(id, token) {
            return Err(vocab_err(
                line_of(vocab_text, token),
                format!("id {id} assigned to both {prev:?} and {token:?}"),
            ));
        }
    }
    for (id, special) in SPECIAL_TOKEN_STRINGS.iter().enumerate() {
        if by_token.get(special) != Some(&(id as u32)) {
            return Err(vocab_err(
                line_of(vocab_text, special),
                format!("special token {special:?} must have id {id}"),
            ));
        }
    }
    for b in 0..=255u8 {
        let s = super::bytes_to_string(&[b]);
        if by_token.get(s.as_str()) != Some(&(b as u32 + BYTE_OFFSET)) {
            return Err(vocab_err(
                line_of(vocab_text, &s),
                format!("byte token {s:?} must have id {}", b as u32 + BYTE_OFFSET),
            ));
        }
    }

    let mut lines = merges_text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.starts_with("#version") => {}
        _ => return Err(merges_err(1, format!("first line must be {MERGES_HEADER:?}"))),
    }
    let mut pairs = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let (Some(left), Some(right), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(merges_err(lineno, format!("expected \"left right\", got {line:?}")));
        };
        let id_of = |tok: &str| {
            by_token
                .get(tok)
                .copied()
                .filter(|&id| id >= NUM_SPECIAL)
                .ok_or_else(|| merges_err(lineno, format!("token {tok:?} is not in the vocabulary")))
        };
        let (l, r) = (id_of(left)?, id_of(right)?);
        let joined = format!("{left}{right}");
        let expected = BASE_VOCAB + pairs.len() as u32;
        if by_token.get(joined.as_str()) != Some(&expected) {
            return Err(merges_err(
                lineno,
                format!("merged token {joined:?} must have id {expected}"),
            ));
        }
        if string_to_bytes(&joined).is_none() {
            return Err(merges_err(lineno, format!("{joined:?} is not byte-level")));
        }
        pairs.push((l, r));
    }
    if entries.len() != BASE_VOCAB as usize + pairs.len() {
        return Err(vocab_err(
            0,
            format!(
                "vocabulary has {} entries but {} merges imply {}",
                entries.len(),
                pairs.len(),
                BASE_VOCAB as usize + pairs.len()
            ),
        ));
    }
    TokenizerModel::from_merges(&pairs).map_err(|e| merges_err(0, e.to_string()))
}
