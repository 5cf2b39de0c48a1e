use std::collections::{BTreeSet, HashMap, HashSet};

use super::model::pretokenize;
use super::{TokenizerModel, BASE_VOCAB, BYTE_OFFSET, NUM_SPECIAL, SPECIAL_TOKEN_STRINGS};
use crate::error::{Error, Result};

fn bytes_of(tokens: &[Vec<u8>], id: u32) -> &[u8] {
    &tokens[(id - NUM_SPECIAL) as usize]
}

struct Word {
    symbols: Vec<u32>,
    count: i64,
}

fn add_pairs(counts: &mut HashMap<(u32, u32), i64>, word: &Word, sign: i64) {
    for w in word.symbols.windows(2) {
        *counts.entry((w[0], w[1])).or_insert(0) += sign * word.count;
    }
}

/// Trains a byte-level BPE model.
///
/// Greedily merges the most frequent adjacent pair (counted within
/// pre-tokens) while the vocabulary is below `vocab_size` and the best pair
/// occurs at least `min_frequency` times. Equal counts go to the
/// lexicographically smallest `(left, right)` byte strings. Pairs whose
/// concatenation is already a token (or spells a special token) are never
/// merged.
pub fn train_bpe<I, S>(corpus: I, vocab_size: usize, min_frequency: u64) -> Result<TokenizerModel>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if vocab_size <= BASE_VOCAB as usize {
        return Err(Error::InvalidConfig(format!(
            "vocab_size {vocab_size} must exceed {BASE_VOCAB} (bytes + specials)"
        )));
    }
    if min_frequency == 0 {
        return Err(Error::InvalidConfig("min_frequency must be at least 1".into()));
    }

    let mut piece_counts: HashMap<Vec<u8>, i64> = HashMap::new();
    let mut documents = 0usize;
    for text in corpus {
        documents += 1;
        for piece in pretokenize(text.as_ref().as_bytes()) {
            *piece_counts.entry(piece.to_vec()).or_insert(0) += 1;
        }
    }
    if documents == 0 {
        return Err(Error::EmptyDataset("tokenizer corpus is empty".into()));
    }

    // Sorting makes word indices independent of hash order.
    let mut pieces: Vec<(Vec<u8>, i64)> = piece_counts.into_iter().collect();
    pieces.sort_unstable();
    let mut words: Vec<Word> = pieces
        .into_iter()
        .map(|(bytes, count)| Word {
            symbols: bytes.iter().map(|&b| b as u32 + BYTE_OFFSET).collect(),
            count,
        })
        .collect();

    let mut pair_counts: HashMap<(u32, u32), i64> = HashMap::new();
    let mut pair_words: HashMap<(u32, u32), BTreeSet<usize>> = HashMap::new();
    for (i, word) in words.iter().enumerate() {
        add_pairs(&mut pair_counts, word, 1);
        for w in word.symbols.windows(2) {
            pair_words.entry((w[0], w[1])).or_default().insert(i);
        }
    }

    let mut token_bytes: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    let mut existing: HashSet<Vec<u8>> = token_bytes.iter().cloned().collect();
    existing.extend(SPECIAL_TOKEN_STRINGS.iter().map(|s| s.as_bytes().to_vec()));
    let mut blocked: HashSet<(u32, u32)> = HashSet::new();
    let mut merges: Vec<(u32, u32)> = Vec::new();

    while (BASE_VOCAB as usize) + merges.len() < vocab_size {
        let mut best: Option<((u32, u32), i64)> = None;
        for (&pair, &count) in &pair_counts {
            if count < min_frequency as i64 || blocked.contains(&pair) {
                continue;
            }
            let better = match best {
                None => true,
                Some((bp, bc)) => {
                    count > bc
                        || (count == bc && {
                            let key = (bytes_of(&token_bytes, pair.0), bytes_of(&token_bytes, pair.1));
                            let best_key =
                                (bytes_of(&token_bytes, bp.0), bytes_of(&token_bytes, bp.1));
                            key < best_key
                        })
                }
            };
            if better {
                best = Some((pair, count));
            }
        }
        let Some((pair, _)) = best else { break };

        let merged = [bytes_of(&token_bytes, pair.0), bytes_of(&token_bytes, pair.1)].concat();
        if existing.contains(&merged) {
            blocked.insert(pair);
            continue;
        }
        let new_id = BASE_VOCAB + merges.len() as u32;
        existing.insert(merged.clone());
        token_bytes.push(merged);
        merges.push(pair);

        let affected: Vec<usize> = pair_words
            .remove(&pair)
            .map(|s| s.into_iter().collect())
            .unwrap_or_default();
        for wi in affected {
            let word = &mut words[wi];
            add_pairs(&mut pair_counts, word, -1);
            let mut out = Vec::with_capacity(word.symbols.len());
            let mut i = 0;
            while i < word.symbols.len() {
                if i + 1 < word.symbols.len()
                    && word.symbols[i] == pair.0
                    && word.symbols[i + 1] == pair.1
                {
                    out.push(new_id);
                    i += 2;
                } else {
                    out.push(word.symbols[i]);
                    i += 1;
                }
            }
            word.symbols = out;
            add_pairs(&mut pair_counts, word, 1);
            for w in word.symbols.windows(2) {
                pair_words.entry((w[0], w[1])).or_default().insert(wi);
            }
        }
        pair_counts.retain(|_, c| *c > 0);
    }

    TokenizerModel::from_merges(&merges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force reference: recount every adjacent pair from scratch at
    /// each step.
    fn naive_bpe(corpus: &[&str], vocab_size: usize, min_frequency: i64) -> Vec<(Vec<u8>, Vec<u8>)> {
        let mut words: Vec<Vec<Vec<u8>>> = corpus
            .iter()
            .flat_map(|t| pretokenize(t.as_bytes()))
            .map(|p| p.iter().map(|&b| vec![b]).collect())
            .collect();
        let mut vocab: HashSet<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        vocab.extend(SPECIAL_TOKEN_STRINGS.iter().map(|s| s.as_bytes().to_vec()));
        let mut merges = Vec::new();
        let mut blocked = HashSet::new();
        while 261 + merges.len() < vocab_size {
            let mut counts: HashMap<(Vec<u8>, Vec<u8>), i64> = HashMap::new();
            for w in &words {
                for p in w.windows(2) {
                    *counts.entry((p[0].clone(), p[1].clone())).or_default() += 1;
                }
            }
            let best = counts
                .into_iter()
                .filter(|(p, c)| *c >= min_frequency && !blocked.contains(p))
                .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)));
            let Some((pair, _)) = best else { break };
            let joined = [pair.0.clone(), pair.1.clone()].concat();
            if vocab.contains(&joined) {
                blocked.insert(pair);
                continue;
            }
            vocab.insert(joined.clone());
            for w in &mut words {
                let mut out = Vec::new();
                let mut i = 0;
                while i < w.len() {
                    if i + 1 < w.len() && w[i] == pair.0 && w[i + 1] == pair.1 {
                        out.push(joined.clone());
                        i += 2;
                    } else {
                        out.push(w[i].clone());
                        i += 1;
                    }
                }
                *w = out;
            }
            merges.push(pair);
        }
        merges
    }

    fn merge_strings(m: &TokenizerModel) -> Vec<(Vec<u8>, Vec<u8>)> {
        m.merges()
            .iter()
            .map(|r| {
                (
                    m.token_bytes(r.left).unwrap().to_vec(),
                    m.token_bytes(r.right).unwrap().to_vec(),
                )
            })
            .collect()
    }

    #[test]
    fn aaaa_learns_one_merge() {
        let m = train_bpe(["aaaa"], 262, 2).unwrap();
        assert_eq!(m.merges().len(), 1);
        assert_eq!(merge_strings(&m), [(b"a".to_vec(), b"a".to_vec())]);
        assert_eq!(m.vocab_size(), 262);
    }

    #[test]
    fn no_qualifying_pair() {
        let m = train_bpe(["abcdef"], 1000, 2).unwrap();
        assert!(m.merges().is_empty());
        assert_eq!(m.vocab_size(), 261);
    }

    #[test]
    fn argument_errors() {
        assert!(train_bpe(["a"], 261, 2).is_err());
        assert!(train_bpe(["a"], 300, 0).is_err());
        assert!(matches!(
            train_bpe(Vec::<String>::new(), 300, 2),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn never_merges_into_a_special_token_spelling() {
        let corpus = ["<s> <s> <s> <s>"];
        let m = train_bpe(corpus, 400, 2).unwrap();
        let strings: Vec<_> = m.vocabulary().into_iter().map(|v| v.0).collect();
        assert_eq!(strings.iter().filter(|s| s.as_str() == "<s>").count(), 1);
        assert_eq!(m.vocab_size(), 261 + m.merges().len());
    }

    #[test]
    fn matches_brute_force_on_french_sample() {
        let corpus = [
            "alors que la cour d'appel a violé l'article 1134 du code civil",
            "alors que la cour d'appel n'a pas répondu aux conclusions",
            "la cour de cassation casse et annule l'arrêt rendu par la cour d'appel",
        ];
        let fast = train_bpe(corpus, 330, 2).unwrap();
        assert_eq!(merge_strings(&fast), naive_bpe(&corpus, 330, 2));
        assert!(fast.vocab_size() <= 330);
    }

    #[test]
    fn corpus_order_does_not_matter() {
        let a = ["le juge", "la cour", "le juge", "la loi la loi"];
        let mut b = a;
        b.reverse();
        let ma = train_bpe(a, 300, 2).unwrap();
        let mb = train_bpe(b, 300, 2).unwrap();
        assert_eq!(ma.merges(), mb.merges());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn incremental_counts_match_brute_force(
            docs in prop::collection::vec("[ab c]{0,24}", 1..6),
            extra in 1usize..30,
        ) {
            let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
            let fast = train_bpe(&refs, 261 + extra, 2).unwrap();
            prop_assert_eq!(merge_strings(&fast), naive_bpe(&refs, 261 + extra, 2));
            prop_assert_eq!(fast.vocab_size(), 261 + fast.merges().len());
            prop_assert!(fast.vocab_size() <= 261 + extra);
        }
    }
}
