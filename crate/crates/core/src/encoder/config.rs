use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_positions() -> usize {
    512
}
fn default_dropout() -> f64 {
    0.1
}
fn default_epsilon() -> f64 {
    1e-12
}
fn default_tied() -> bool {
    true
}

/// Architecture of a BERT-style encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub num_layers: usize,
    pub hidden_size: usize,
    pub num_heads: usize,
    /// Inner width of the feed-forward block; `4 * hidden_size` when built
    /// through [`EncoderConfig::new`].
    pub feed_forward_size: usize,
    pub vocab_size: usize,
    #[serde(default = "default_positions")]
    pub max_positions: usize,
    #[serde(default = "default_dropout")]
    pub dropout_rate: f64,
    #[serde(default = "default_epsilon")]
    pub layer_norm_epsilon: f64,
    /// Share the MLM output projection with the token embedding matrix.
    #[serde(default = "default_tied")]
    pub tie_word_embeddings: bool,
}

/// The four published shapes, as (layers, hidden, heads).
pub const PROFILES: [(&str, usize, usize, usize); 4] = [
    ("tiny", 2, 128, 2),
    ("mini", 4, 256, 4),
    ("small", 6, 512, 8),
    ("base", 12, 768, 12),
];

impl EncoderConfig {
    pub fn new(num_layers: usize, hidden_size: usize, num_heads: usize, vocab_size: usize) -> Self {
        Self {
            num_layers,
            hidden_size,
            num_heads,
            feed_forward_size: 4 * hidden_size,
            vocab_size,
            max_positions: default_positions(),
            dropout_rate: default_dropout(),
            layer_norm_epsilon: default_epsilon(),
            tie_word_embeddings: true,
        }
    }

    /// One of `tiny`, `mini`, `small`, `base`.
    pub fn profile(name: &str, vocab_size: usize) -> Result<Self> {
        PROFILES
            .iter()
            .find(|p| p.0 == name)
            .map(|&(_, l, h, a)| Self::new(l, h, a, vocab_size))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model profile {name:?}")))
    }

    pub fn with_max_positions(mut self, max_positions: usize) -> Self {
        self.max_positions = max_positions;
        self
    }

    pub fn head_size(&self) -> usize {
        self.hidden_size / self.num_heads
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            self.num_layers,
            self.hidden_size,
            self.num_heads,
            self.feed_forward_size,
            self.vocab_size,
            self.max_positions,
        ];
        if sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "all encoder sizes must be positive: {self:?}"
            )));
        }
        if !self.hidden_size.is_multiple_of(self.num_heads) {
            return Err(Error::InvalidConfig(format!(
                "hidden_size {} is not divisible by num_heads {}",
                self.hidden_size, self.num_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig(format!(
                "dropout_rate {} must be in [0,1)",
                self.dropout_rate
            )));
        }
        if self.layer_norm_epsilon.is_nan() || self.layer_norm_epsilon < 0.0 {
            return Err(Error::InvalidConfig("layer_norm_epsilon must be >= 0".into()));
        }
        Ok(())
    }
}

/// Parameter count of everything except the task classification head. A
/// tied MLM projection is counted once.
pub fn count_params(config: &EncoderConfig) -> usize {
    let h = config.hidden_size;
    let f = config.feed_forward_size;
    let v = config.vocab_size;
    let dense = |i: usize, o: usize| i * o + o;
    let norm = 2 * h;
    let embeddings = v * h + config.max_positions * h + norm;
    let layer = 4 * dense(h, h) + norm + dense(h, f) + dense(f, h) + norm;
    let decoder = if config.tie_word_embeddings { 0 } else { v * h };
    let mlm = dense(h, h) + norm + decoder + v;
    embeddings + config.num_layers * layer + mlm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_count_by_hand() {
        // L=1, H=4, A=1, F=16, V=261, P=8
        //   token 261*4 = 1044, position 8*4 = 32, embedding norm 8
        //   q,k,v,o 4*(16+4) = 80, norms 8+8, ffn (64+16) + (64+4) = 148
        //   mlm transform 20, norm 8, bias 261
        let config = EncoderConfig::new(1, 4, 1, 261).with_max_positions(8);
        assert_eq!(count_params(&config), 1044 + 32 + 8 + 80 + 16 + 148 + 20 + 8 + 261);
        let untied = EncoderConfig {
            tie_word_embeddings: false,
            ..config
        };
        assert_eq!(count_params(&untied), 1617 + 1044);
    }

    #[test]
    fn base_profile_is_about_110m() {
        let base = EncoderConfig::profile("base", 32_000).unwrap();
        let n = count_params(&base) as f64;
        assert!((n / 110e6 - 1.0).abs() <= 0.10, "{n}");
    }

    #[test]
    fn validation() {
        assert!(EncoderConfig::new(2, 128, 2, 300).validate().is_ok());
        assert!(EncoderConfig::new(2, 130, 4, 300).validate().is_err());
        assert!(EncoderConfig::new(0, 128, 2, 300).validate().is_err());
        assert!(EncoderConfig::profile("huge", 300).is_err());
        let p = EncoderConfig::profile("small", 300).unwrap();
        assert_eq!((p.num_layers, p.hidden_size, p.num_heads), (6, 512, 8));
    }
}
