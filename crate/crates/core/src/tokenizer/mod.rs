//! Byte-level BPE: training, encoding, decoding and the `vocab.json` /
//! `merges.txt` file pair.
//!
//! Ids are laid out as five special tokens (0..5), the 256 single bytes
//! (5..261), then one id per learned merge in rank order. A merge is never
//! learned if its output already exists as a token, so the vocabulary size
//! is always `261 + merges`.

mod byte_map;
mod io;
mod model;
mod train;

pub use byte_map::{byte_to_char, bytes_to_string, string_to_bytes};
pub use io::{load_tokenizer, parse_tokenizer_files, render_files, save_tokenizer, MERGES_FILE, MERGES_HEADER, VOCAB_FILE};
pub use model::{pretokenize, Encoding, MergeRule, SpecialTokens, TokenizerModel};
pub use train::train_bpe;

/// Number of special tokens at the bottom of the vocabulary.
pub const NUM_SPECIAL: u32 = 5;
/// First id of the byte alphabet.
pub const BYTE_OFFSET: u32 = NUM_SPECIAL;
/// Size of the base vocabulary (specials + bytes).
pub const BASE_VOCAB: u32 = NUM_SPECIAL + 256;
/// Default encoding length limit.
pub const DEFAULT_MAX_SEQUENCE_LENGTH: usize = 512;

/// String forms of the special tokens, in id order: sequence start, sequence
/// end, padding, unknown, mask.
pub const SPECIAL_TOKEN_STRINGS: [&str; 5] = ["<s>", "</s>", "<pad>", "<unk>", "<mask>"];
