use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::EncoderConfig;
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Standard deviation of freshly initialized weights.
pub const INIT_STD: f64 = 0.02;
/// Truncation point of the initializer, in standard deviations of the
/// underlying normal.
const TRUNCATION: f64 = 2.0;

/// `y = x · weight + bias`, with `weight` stored as (inputs × outputs).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
}

impl LayerNorm {
    pub fn new(width: usize) -> Self {
        Self {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    /// vocab_size × hidden
    pub token: Array2<f64>,
    /// max_positions × hidden
    pub position: Array2<f64>,
    pub norm: LayerNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer {
    pub query: Dense,
    pub key: Dense,
    pub value: Dense,
    pub attention_output: Dense,
    pub attention_norm: LayerNorm,
    pub intermediate: Dense,
    pub output: Dense,
    pub output_norm: LayerNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlmHead {
    pub transform: Dense,
    pub norm: LayerNorm,
    /// Separate vocab_size × hidden output matrix; `None` when tied to the
    /// token embeddings.
    pub decoder: Option<Array2<f64>>,
    pub bias: Array1<f64>,
}

/// Pooled-token classifier: dense + tanh, dropout, dense + softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    pub pooler: Dense,
    pub output: Dense,
}

impl ClassifierHead {
    pub fn num_classes(&self) -> usize {
        self.output.bias.len()
    }
}

/// Every trainable tensor of the encoder, its MLM head and (optionally) a
/// classification head. Gradients use the same structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: EncoderConfig,
    pub embeddings: Embeddings,
    pub layers: Vec<EncoderLayer>,
    pub mlm: MlmHead,
    pub classifier: Option<ClassifierHead>,
}

/// How a tensor is initialized and whether weight decay applies to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
    NormScale,
    NormShift,
}

impl ParamKind {
    pub fn decays(self) -> bool {
        self == ParamKind::Weight
    }
}

pub struct TensorRef<'a> {
    pub name: String,
    pub kind: ParamKind,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

pub struct TensorMut<'a> {
    pub name: String,
    pub kind: ParamKind,
    pub shape: Vec<usize>,
    pub data: &'a mut [f64],
}

macro_rules! collect_tensors {
    ($self:expr, $out:ident, $push2:ident, $push1:ident, $iter:ident, [$($r:tt)*]) => {{
        let ModelParams {
            embeddings,
            layers,
            mlm,
            classifier,
            ..
        } = $self;
        $push2(&mut $out, "embeddings.token".into(), ParamKind::Weight, $($r)* embeddings.token);
        $push2(&mut $out, "embeddings.position".into(), ParamKind::Weight, $($r)* embeddings.position);
        $push1(&mut $out, "embeddings.norm.gamma".into(), ParamKind::NormScale, $($r)* embeddings.norm.gamma);
        $push1(&mut $out, "embeddings.norm.beta".into(), ParamKind::NormShift, $($r)* embeddings.norm.beta);
        for (i, layer) in layers.$iter().enumerate() {
            let EncoderLayer {
                query,
                key,
                value,
                attention_output,
                attention_norm,
                intermediate,
                output,
                output_norm,
            } = layer;
            for (name, dense) in [
                ("attention.query", query),
                ("attention.key", key),
                ("attention.value", value),
                ("attention.output", attention_output),
                ("intermediate", intermediate),
                ("output", output),
            ] {
                $push2(&mut $out, format!("layers.{i}.{name}.weight"), ParamKind::Weight, $($r)* dense.weight);
                $push1(&mut $out, format!("layers.{i}.{name}.bias"), ParamKind::Bias, $($r)* dense.bias);
            }
            for (name, norm) in [("attention.norm", attention_norm), ("output.norm", output_norm)] {
                $push1(&mut $out, format!("layers.{i}.{name}.gamma"), ParamKind::NormScale, $($r)* norm.gamma);
                $push1(&mut $out, format!("layers.{i}.{name}.beta"), ParamKind::NormShift, $($r)* norm.beta);
            }
        }
        $push2(&mut $out, "mlm.transform.weight".into(), ParamKind::Weight, $($r)* mlm.transform.weight);
        $push1(&mut $out, "mlm.transform.bias".into(), ParamKind::Bias, $($r)* mlm.transform.bias);
        $push1(&mut $out, "mlm.norm.gamma".into(), ParamKind::NormScale, $($r)* mlm.norm.gamma);
        $push1(&mut $out, "mlm.norm.beta".into(), ParamKind::NormShift, $($r)* mlm.norm.beta);
        if let Some(decoder) = $($r)* mlm.decoder {
            $push2(&mut $out, "mlm.decoder".into(), ParamKind::Weight, decoder);
        }
        $push1(&mut $out, "mlm.bias".into(), ParamKind::Bias, $($r)* mlm.bias);
        if let Some(head) = classifier {
            $push2(&mut $out, "classifier.pooler.weight".into(), ParamKind::Weight, $($r)* head.pooler.weight);
            $push1(&mut $out, "classifier.pooler.bias".into(), ParamKind::Bias, $($r)* head.pooler.bias);
            $push2(&mut $out, "classifier.output.weight".into(), ParamKind::Weight, $($r)* head.output.weight);
            $push1(&mut $out, "classifier.output.bias".into(), ParamKind::Bias, $($r)* head.output.bias);
        }
    }};
}

fn push2_mut<'a>(out: &mut Vec<TensorMut<'a>>, name: String, kind: ParamKind, a: &'a mut Array2<f64>) {
    let shape = a.shape().to_vec();
    out.push(TensorMut {
        name,
        kind,
        shape,
        data: a.as_slice_mut().expect("standard layout"),
    });
}

fn push1_mut<'a>(out: &mut Vec<TensorMut<'a>>, name: String, kind: ParamKind, a: &'a mut Array1<f64>) {
    let shape = a.shape().to_vec();
    out.push(TensorMut {
        name,
        kind,
        shape,
        data: a.as_slice_mut().expect("standard layout"),
    });
}

fn push2_ref<'a>(out: &mut Vec<TensorRef<'a>>, name: String, kind: ParamKind, a: &'a Array2<f64>) {
    out.push(TensorRef {
        name,
        kind,
        shape: a.shape().to_vec(),
        data: a.as_slice().expect("standard layout"),
    });
}

fn push1_ref<'a>(out: &mut Vec<TensorRef<'a>>, name: String, kind: ParamKind, a: &'a Array1<f64>) {
    out.push(TensorRef {
        name,
        kind,
        shape: a.shape().to_vec(),
        data: a.as_slice().expect("standard layout"),
    });
}

/// Truncated normal with the given standard deviation: the underlying
/// normal is cut at ±2σ' and σ' is chosen so the truncated distribution
/// has exactly `std`.
fn truncated_normal(rng: &mut impl Rng, std: f64) -> f64 {
    let a = TRUNCATION;
    let pdf = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mass = libm::erf(a / std::f64::consts::SQRT_2);
    let variance_ratio = 1.0 - 2.0 * a * pdf / mass;
    let scale = std / variance_ratio.sqrt();
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= a {
            return z * scale;
        }
    }
}

impl ModelParams {
    /// All-zero parameters with the shapes implied by `config`.
    pub fn zeros(config: &EncoderConfig) -> Result<Self> {
        config.validate()?;
        let h = config.hidden_size;
        let f = config.feed_forward_size;
        let layer = || EncoderLayer {
            query: Dense::zeros(h, h),
            key: Dense::zeros(h, h),
            value: Dense::zeros(h, h),
            attention_output: Dense::zeros(h, h),
            attention_norm: LayerNorm::new(h),
            intermediate: Dense::zeros(h, f),
            output: Dense::zeros(f, h),
            output_norm: LayerNorm::new(h),
        };
        Ok(Self {
            config: config.clone(),
            embeddings: Embeddings {
                token: Array2::zeros((config.vocab_size, h)),
                position: Array2::zeros((config.max_positions, h)),
                norm: LayerNorm::new(h),
            },
            layers: (0..config.num_layers).map(|_| layer()).collect(),
            mlm: MlmHead {
                transform: Dense::zeros(h, h),
                norm: LayerNorm::new(h),
                decoder: (!config.tie_word_embeddings)
                    .then(|| Array2::zeros((config.vocab_size, h))),
                bias: Array1::zeros(config.vocab_size),
            },
            classifier: None,
        })
    }

    /// Weights from a truncated normal with standard deviation 0.02; biases
    /// and norm shifts zero; norm scales one. Each tensor draws from its own
    /// stream keyed by `seed` and its position, so the result is
    /// reproducible.
    pub fn init(config: &EncoderConfig, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(config)?;
        params.reinitialize(seed);
        Ok(params)
    }

    fn reinitialize(&mut self, seed: u64) {
        for (i, t) in self.tensors_mut().into_iter().enumerate() {
            init_tensor(t, seed, i as u64);
        }
    }

    /// Attaches a freshly initialized classification head.
    pub fn attach_classifier(&mut self, num_classes: usize, seed: u64) -> Result<()> {
        if num_classes < 2 {
            return Err(Error::InvalidConfig(format!(
                "a classifier needs at least 2 classes, got {num_classes}"
            )));
        }
        let h = self.config.hidden_size;
        self.classifier = Some(ClassifierHead {
            pooler: Dense::zeros(h, h),
            output: Dense::zeros(h, num_classes),
        });
        for (i, t) in self
            .tensors_mut()
            .into_iter()
            .enumerate()
            .filter(|(_, t)| t.name.starts_with("classifier."))
        {
            init_tensor(t, seed, 1_000_000 + i as u64);
        }
        Ok(())
    }

    /// Tensors in canonical order (the order used by checkpoints and the
    /// optimizer).
    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = Vec::new();
        collect_tensors!(self, out, push2_ref, push1_ref, iter, [&]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::new();
        collect_tensors!(self, out, push2_mut, push1_mut, iter_mut, [&mut]);
        out
    }

    pub fn num_elements(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    /// Zero-filled copy with identical structure.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.data.fill(0.0);
        }
        z
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        let theirs = other.tensors();
        for (mine, theirs) in self.tensors_mut().into_iter().zip(theirs) {
            debug_assert_eq!(mine.name, theirs.name);
            for (a, b) in mine.data.iter_mut().zip(theirs.data) {
                *a += scale * b;
            }
        }
    }

    pub fn same_structure(&self, other: &ModelParams) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len()
            && a.iter()
                .zip(&b)
                .all(|(x, y)| x.name == y.name && x.shape == y.shape)
    }
}

fn init_tensor(t: TensorMut<'_>, seed: u64, tag: u64) {
    match t.kind {
        ParamKind::Weight => {
            let mut rng = rng_from(seed, &[tag]);
            for v in t.data.iter_mut() {
                *v = truncated_normal(&mut rng, INIT_STD);
            }
        }
        ParamKind::Bias | ParamKind::NormShift => t.data.fill(0.0),
        ParamKind::NormScale => t.data.fill(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::count_params;

    fn toy() -> EncoderConfig {
        EncoderConfig::new(1, 4, 1, 261).with_max_positions(8)
    }

    #[test]
    fn init_is_deterministic() {
        let a = ModelParams::init(&toy(), 7).unwrap();
        let b = ModelParams::init(&toy(), 7).unwrap();
        assert_eq!(a, b);
        let c = ModelParams::init(&toy(), 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn norm_scales_are_one_and_biases_zero() {
        let p = ModelParams::init(&EncoderConfig::new(2, 8, 2, 300), 3).unwrap();
        for t in p.tensors() {
            match t.kind {
                ParamKind::NormScale => assert!(t.data.iter().all(|&v| v == 1.0), "{}", t.name),
                ParamKind::Bias | ParamKind::NormShift => {
                    assert!(t.data.iter().all(|&v| v == 0.0), "{}", t.name)
                }
                ParamKind::Weight => assert!(t.data.iter().all(|&v| v.abs() <= 0.05)),
            }
        }
    }

    #[test]
    fn embedding_variance_matches_std() {
        // 4000 × 32 = 128 000 draws.
        let config = EncoderConfig::new(1, 32, 2, 4000).with_max_positions(8);
        let p = ModelParams::init(&config, 11).unwrap();
        let data = p.embeddings.token.as_slice().unwrap();
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let target = INIT_STD * INIT_STD;
        assert!((var / target - 1.0).abs() < 0.10, "variance {var} vs {target}");
    }

    #[test]
    fn allocated_elements_match_count_params() {
        for config in [
            toy(),
            EncoderConfig::new(3, 12, 3, 500).with_max_positions(20),
            EncoderConfig {
                tie_word_embeddings: false,
                ..toy()
            },
        ] {
            let mut p = ModelParams::init(&config, 1).unwrap();
            assert_eq!(p.num_elements(), count_params(&config));
            p.attach_classifier(3, 2).unwrap();
            let h = config.hidden_size;
            assert_eq!(p.num_elements(), count_params(&config) + h * h + h + 3 * h + 3);
        }
    }

    #[test]
    fn tensor_names_are_unique() {
        let mut p = ModelParams::init(&EncoderConfig::new(2, 4, 2, 261), 1).unwrap();
        p.attach_classifier(2, 0).unwrap();
        let names: std::collections::HashSet<_> = p.tensors().into_iter().map(|t| t.name).collect();
        assert_eq!(names.len(), p.tensors().len());
    }
}
