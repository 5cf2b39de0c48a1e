use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{
    bytes_to_string, BASE_VOCAB, BYTE_OFFSET, DEFAULT_MAX_SEQUENCE_LENGTH, NUM_SPECIAL,
    SPECIAL_TOKEN_STRINGS,
};
use crate::error::{Error, Result};

/// Ids of the special tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialTokens {
    pub sequence_start: u32,
    pub sequence_end: u32,
    pub padding: u32,
    pub unknown: u32,
    pub mask: u32,
}

impl Default for SpecialTokens {
    fn default() -> Self {
        Self {
            sequence_start: 0,
            sequence_end: 1,
            padding: 2,
            unknown: 3,
            mask: 4,
        }
    }
}

impl SpecialTokens {
    pub fn is_special(&self, id: u32) -> bool {
        id < NUM_SPECIAL
    }
}

/// One learned merge: `left` and `right` are token ids, `rank` its position
/// in the merge list. The merged token has id `BASE_VOCAB + rank`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeRule {
    pub left: u32,
    pub right: u32,
    pub rank: u32,
}

/// Token ids plus attention mask (1 = real token, 0 = padding).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    pub token_ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
}

impl Encoding {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    /// Unpadded encoding of raw ids.
    pub fn from_ids(ids: Vec<u32>) -> Self {
        let attention_mask = vec![1; ids.len()];
        Self {
            token_ids: ids,
            attention_mask,
        }
    }
}

/// A trained byte-level BPE model. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizerModel {
    /// Byte content of every non-special token, indexed by `id - NUM_SPECIAL`.
    token_bytes: Vec<Vec<u8>>,
    merges: Vec<MergeRule>,
    merge_lookup: HashMap<(u32, u32), u32>,
    specials: SpecialTokens,
    max_sequence_length: usize,
}

/// Splits bytes into pre-tokens. A boundary sits before every space that
/// follows a non-space byte, so a word carries its leading space and merges
/// never join a word to the space after it.
pub fn pretokenize(bytes: &[u8]) -> Vec<&[u8]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..bytes.len() {
        if bytes[i] == b' ' && bytes[i - 1] != b' ' {
            out.push(&bytes[start..i]);
            start = i;
        }
    }
    if start < bytes.len() {
        out.push(&bytes[start..]);
    }
    out
}

impl TokenizerModel {
    /// Builds a model from merges given as `(left, right)` id pairs in rank
    /// order. Each merge must refer to existing ids and produce a new token.
    pub fn from_merges(pairs: &[(u32, u32)]) -> Result<Self> {
        let mut token_bytes: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        let mut merges = Vec::with_capacity(pairs.len());
        let mut merge_lookup = HashMap::with_capacity(pairs.len());
        let mut seen: HashMap<Vec<u8>, u32> = token_bytes
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32 + BYTE_OFFSET))
            .collect();
        for (rank, &(left, right)) in pairs.iter().enumerate() {
            let next_id = BASE_VOCAB + rank as u32;
            let lookup = |id: u32| {
                if id >= BYTE_OFFSET && id < next_id {
                    Ok(&token_bytes[(id - NUM_SPECIAL) as usize])
                } else {
                    Err(Error::UnknownTokenId(id))
                }
            };
            let mut merged = lookup(left)?.clone();
            merged.extend_from_slice(lookup(right)?);
            if seen.contains_key(&merged) {
                return Err(Error::InvalidConfig(format!(
                    "merge {rank} produces existing token {:?}",
                    bytes_to_string(&merged)
                )));
            }
            seen.insert(merged.clone(), next_id);
            token_bytes.push(merged);
            merges.push(MergeRule {
                left,
                right,
                rank: rank as u32,
            });
            merge_lookup.insert((left, right), rank as u32);
        }
        Ok(Self {
            token_bytes,
            merges,
            merge_lookup,
            specials: SpecialTokens::default(),
            max_sequence_length: DEFAULT_MAX_SEQUENCE_LENGTH,
        })
    }

    pub fn with_max_sequence_length(mut self, max_sequence_length: usize) -> Self {
        self.max_sequence_length = max_sequence_length;
        self
    }

    pub fn max_sequence_length(&self) -> usize {
        self.max_sequence_length
    }

    pub fn specials(&self) -> SpecialTokens {
        self.specials
    }

    pub fn merges(&self) -> &[MergeRule] {
        &self.merges
    }

    pub fn vocab_size(&self) -> usize {
        NUM_SPECIAL as usize + self.token_bytes.len()
    }

    /// Raw bytes of a non-special token.
    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        id.checked_sub(NUM_SPECIAL)
            .and_then(|i| self.token_bytes.get(i as usize))
            .map(Vec::as_slice)
    }

    /// Printable form of a token, as written to `vocab.json`.
    pub fn token_string(&self, id: u32) -> Option<String> {
        if id < NUM_SPECIAL {
            Some(SPECIAL_TOKEN_STRINGS[id as usize].to_owned())
        } else {
            self.token_bytes(id).map(bytes_to_string)
        }
    }

    /// Token string → id for the full vocabulary, in id order.
    pub fn vocabulary(&self) -> Vec<(String, u32)> {
        (0..self.vocab_size() as u32)
            .map(|id| (self.token_string(id).expect("id in range"), id))
            .collect()
    }

    fn encode_pretoken(&self, bytes: &[u8]) -> Vec<u32> {
        let mut symbols: Vec<u32> = bytes.iter().map(|&b| b as u32 + BYTE_OFFSET).collect();
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.merge_lookup.get(&(w[0], w[1])).copied())
                .min();
            let Some(rank) = best else { break };
            let rule = self.merges[rank as usize];
            let merged = BASE_VOCAB + rank;
            let mut out = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i] == rule.left && symbols[i + 1] == rule.right {
                    out.push(merged);
                    i += 2;
                } else {
                    out.push(symbols[i]);
                    i += 1;
                }
            }
            symbols = out;
        }
        symbols
    }

    /// Token ids of `text` without specials, truncation or padding.
    pub fn encode_ids(&self, text: &str) -> Vec<u32> {
        let mut cache: HashMap<&[u8], Vec<u32>> = HashMap::new();
        let mut out = Vec::with_capacity(text.len() / 3 + 1);
        for piece in pretokenize(text.as_bytes()) {
            let ids = cache
                .entry(piece)
                .or_insert_with(|| self.encode_pretoken(piece));
            out.extend_from_slice(ids);
        }
        out
    }

    /// `[start, tokens…, end]`, truncated to `max_sequence_length` (keeping
    /// the head and forcing the end token last), then right-padded to
    /// `pad_to` if given.
    pub fn encode(&self, text: &str, pad_to: Option<usize>) -> Result<Encoding> {
        if let Some(p) = pad_to {
            if p > self.max_sequence_length {
                return Err(Error::OutOfRange(format!(
                    "pad_to {p} exceeds max_sequence_length {}",
                    self.max_sequence_length
                )));
            }
        }
        let body = self.encode_ids(text);
        let keep = body.len().min(self.max_sequence_length.saturating_sub(2));
        let mut ids = Vec::with_capacity(keep + 2);
        ids.push(self.specials.sequence_start);
        ids.extend_from_slice(&body[..keep]);
        ids.push(self.specials.sequence_end);
        let mut mask = vec![1u8; ids.len()];
        if let Some(p) = pad_to {
            if p > ids.len() {
                ids.resize(p, self.specials.padding);
                mask.resize(p, 0);
            }
        }
        Ok(Encoding {
            token_ids: ids,
            attention_mask: mask,
        })
    }

    /// Concatenates the bytes of all non-special ids and decodes them as
    /// UTF-8.
    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let mut bytes = Vec::with_capacity(ids.len() * 3);
        for &id in ids {
            if id < NUM_SPECIAL {
                continue;
            }
            let t = self.token_bytes(id).ok_or(Error::UnknownTokenId(id))?;
            bytes.extend_from_slice(t);
        }
        String::from_utf8(bytes).map_err(|_| Error::InvalidDecodedUtf8)
    }
}
