//! Random corruption of token sequences for masked-language-model training.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};
use crate::tokenizer::{Encoding, SpecialTokens, BYTE_OFFSET, NUM_SPECIAL};

/// Selection probability and the mask/random/keep split of selected
/// positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskingPolicy {
    pub mask_probability: f64,
    pub replace_with_mask: f64,
    pub replace_with_random: f64,
    pub keep_original: f64,
    pub seed: u64,
}

impl Default for MaskingPolicy {
    fn default() -> Self {
        Self {
            mask_probability: 0.15,
            replace_with_mask: 0.8,
            replace_with_random: 0.1,
            keep_original: 0.1,
            seed: 0,
        }
    }
}

impl MaskingPolicy {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// The same policy with a seed derived from `tags`, so each training
    /// step corrupts its batch independently of earlier steps.
    pub fn derived(self, tags: &[u64]) -> Self {
        self.with_seed(derive_seed(self.seed, tags))
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [
            self.mask_probability,
            self.replace_with_mask,
            self.replace_with_random,
            self.keep_original,
        ];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidConfig(
                "masking probabilities must lie in [0, 1]".into(),
            ));
        }
        let sum = self.replace_with_mask + self.replace_with_random + self.keep_original;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "mask/random/keep fractions sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Corrupted inputs and the prediction targets (`None` = not scored).
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedBatch {
    pub inputs: Vec<Encoding>,
    pub labels: Vec<Vec<Option<u32>>>,
}

impl MaskedBatch {
    pub fn num_targets(&self) -> usize {
        self.labels.iter().flatten().flatten().count()
    }
}

/// Positions holding a real token: attended and not a special id.
pub fn is_eligible(id: u32, attention: u8) -> bool {
    attention != 0 && id >= NUM_SPECIAL
}

/// Selects each eligible position with `mask_probability`; selected
/// positions become `<mask>`, a uniformly drawn non-special token, or stay
/// unchanged, in the policy's proportions.
pub fn mask_batch(encodings: &[Encoding], policy: &MaskingPolicy, vocab_size: usize) -> Result<MaskedBatch> {
    policy.validate()?;
    if vocab_size <= BYTE_OFFSET as usize {
        return Err(Error::InvalidConfig(format!("vocabulary of {vocab_size} has no regular tokens")));
    }
    let mask_id = SpecialTokens::default().mask;
    let mut rng = rng_from(policy.seed, &[]);
    let mut inputs = Vec::with_capacity(encodings.len());
    let mut labels = Vec::with_capacity(encodings.len());
    for enc in encodings {
        if enc.token_ids.len() != enc.attention_mask.len() {
            return Err(Error::LengthMismatch {
                left: enc.token_ids.len(),
                right: enc.attention_mask.len(),
            });
        }
        let mut ids = enc.token_ids.clone();
        let mut row = vec![None; ids.len()];
        for (i, (&id, &att)) in enc.token_ids.iter().zip(&enc.attention_mask).enumerate() {
            if !is_eligible(id, att) || rng.random::<f64>() >= policy.mask_probability {
                continue;
            }
            row[i] = Some(id);
            let r: f64 = rng.random();
            if r < policy.replace_with_mask {
                ids[i] = mask_id;
            } else if r < policy.replace_with_mask + policy.replace_with_random {
                ids[i] = rng.random_range(BYTE_OFFSET..vocab_size as u32);
            }
        }
        inputs.push(Encoding {
            token_ids: ids,
            attention_mask: enc.attention_mask.clone(),
        });
        labels.push(row);
    }
    Ok(MaskedBatch { inputs, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plain(n: usize) -> Encoding {
        Encoding::from_ids((0..n).map(|i| 5 + (i % 200) as u32).collect())
    }

    #[test]
    fn zero_probability_is_identity() {
        let encs = vec![plain(50), plain(7)];
        let policy = MaskingPolicy {
            mask_probability: 0.0,
            ..Default::default()
        };
        let out = mask_batch(&encs, &policy, 300).unwrap();
        assert_eq!(out.inputs, encs);
        assert_eq!(out.num_targets(), 0);
    }

    #[test]
    fn specials_and_padding_never_selected() {
        let enc = Encoding {
            token_ids: vec![0, 1, 2, 3, 4, 2, 2],
            attention_mask: vec![1, 1, 0, 1, 1, 0, 0],
        };
        let policy = MaskingPolicy {
            mask_probability: 1.0,
            ..Default::default()
        };
        let out = mask_batch(std::slice::from_ref(&enc), &policy, 300).unwrap();
        assert_eq!(out.inputs[0], enc);
        assert_eq!(out.num_targets(), 0);
    }

    #[test]
    fn padded_real_ids_are_not_eligible() {
        // A regular id behind a zero attention bit still counts as padding.
        let enc = Encoding {
            token_ids: vec![0, 40, 41, 1],
            attention_mask: vec![1, 1, 0, 0],
        };
        let policy = MaskingPolicy {
            mask_probability: 1.0,
            ..Default::default()
        };
        let out = mask_batch(&[enc], &policy, 300).unwrap();
        assert_eq!(out.labels[0], vec![None, Some(40), None, None]);
    }

    #[test]
    fn rejects_bad_fractions() {
        let policy = MaskingPolicy {
            keep_original: 0.2,
            ..Default::default()
        };
        assert!(mask_batch(&[plain(3)], &policy, 300).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let encs = vec![plain(200)];
        let p = MaskingPolicy::default().with_seed(4);
        assert_eq!(mask_batch(&encs, &p, 300).unwrap(), mask_batch(&encs, &p, 300).unwrap());
        let q = p.with_seed(5);
        assert_ne!(mask_batch(&encs, &p, 300).unwrap(), mask_batch(&encs, &q, 300).unwrap());
    }

    proptest! {
        #[test]
        fn labels_hold_originals(seed in any::<u64>(), n in 1usize..80) {
            let enc = plain(n);
            let out = mask_batch(std::slice::from_ref(&enc), &MaskingPolicy::default().with_seed(seed), 300).unwrap();
            for (i, l) in out.labels[0].iter().enumerate() {
                match l {
                    Some(orig) => prop_assert_eq!(*orig, enc.token_ids[i]),
                    None => prop_assert_eq!(out.inputs[0].token_ids[i], enc.token_ids[i]),
                }
                prop_assert!(out.inputs[0].token_ids[i] < 300);
            }
        }
    }
}
