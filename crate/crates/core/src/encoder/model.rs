//! Encoder forward pass with a recorded trace, and the matching backward
//! pass.

use ndarray::{s, Array2, Axis};

use super::ops::{
    dropout_mask, gelu, gelu_derivative, layer_norm_backward, layer_norm_forward, softmax_rows,
    NormCache,
};
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::rng::rng_from;
use crate::tokenizer::Encoding;

/// Inference or training (dropout on, seeded).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    Train { dropout_seed: u64 },
}

impl Mode {
    pub fn new(train_mode: bool, dropout_seed: u64) -> Self {
        if train_mode {
            Mode::Train { dropout_seed }
        } else {
            Mode::Eval
        }
    }

    /// Dropout mask for one site, or `None` when dropout is inactive.
    pub(crate) fn mask(&self, site: u64, rows: usize, cols: usize, rate: f64) -> Option<Array2<f64>> {
        match *self {
            Mode::Train { dropout_seed } if rate > 0.0 => {
                Some(dropout_mask(rows, cols, rate, &mut rng_from(dropout_seed, &[site])))
            }
            _ => None,
        }
    }
}

pub(crate) const CLASSIFIER_DROPOUT_SITE: u64 = 1 << 32;

fn apply_mask(x: &mut Array2<f64>, mask: &Option<Array2<f64>>) {
    if let Some(m) = mask {
        *x *= m;
    }
}

#[derive(Debug, Clone)]
pub(super) struct LayerTrace {
    input: Array2<f64>,
    query: Array2<f64>,
    key: Array2<f64>,
    value: Array2<f64>,
    /// Attention probabilities per head, sequence × sequence.
    pub(super) probs: Vec<Array2<f64>>,
    context: Array2<f64>,
    attention_dropout: Option<Array2<f64>>,
    attention_norm: NormCache,
    attended: Array2<f64>,
    intermediate_pre: Array2<f64>,
    intermediate: Array2<f64>,
    output_dropout: Option<Array2<f64>>,
    output_norm: NormCache,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    token_ids: Vec<u32>,
    embedding_norm: NormCache,
    embedding_dropout: Option<Array2<f64>>,
    pub(super) layers: Vec<LayerTrace>,
}

/// Final hidden states (sequence × hidden) plus the trace.
pub struct EncoderOutput {
    pub hidden: Array2<f64>,
    pub trace: ForwardTrace,
}

impl ModelParams {
    fn check_input(&self, encoding: &Encoding) -> Result<()> {
        let c = &self.config;
        if encoding.token_ids.is_empty() {
            return Err(Error::OutOfRange("empty input sequence".into()));
        }
        if encoding.token_ids.len() > c.max_positions {
            return Err(Error::OutOfRange(format!(
                "sequence length {} exceeds max_positions {}",
                encoding.token_ids.len(),
                c.max_positions
            )));
        }
        if encoding.attention_mask.len() != encoding.token_ids.len() {
            return Err(Error::ShapeMismatch(format!(
                "attention mask has {} entries for {} tokens",
                encoding.attention_mask.len(),
                encoding.token_ids.len()
            )));
        }
        if let Some(&bad) = encoding.token_ids.iter().find(|&&id| id as usize >= c.vocab_size) {
            return Err(Error::OutOfRange(format!(
                "token id {bad} outside vocabulary of {}",
                c.vocab_size
            )));
        }
        if !encoding.attention_mask.contains(&1) {
            return Err(Error::OutOfRange("attention mask selects no token".into()));
        }
        Ok(())
    }

    /// Runs the encoder: token + position embeddings, layer norm, dropout,
    /// then per layer self-attention (padding keys masked out) + residual +
    /// layer norm and GELU feed-forward + residual + layer norm.
    pub fn forward(&self, encoding: &Encoding, mode: Mode) -> Result<EncoderOutput> {
        self.check_input(encoding)?;
        let c = &self.config;
        let seq = encoding.token_ids.len();
        let h = c.hidden_size;
        let heads = c.num_heads;
        let d = c.head_size();
        let scale = 1.0 / (d as f64).sqrt();
        let eps = c.layer_norm_epsilon;

        let mut summed = self.embeddings.position.slice(s![..seq, ..]).to_owned();
        for (mut row, &id) in summed.rows_mut().into_iter().zip(&encoding.token_ids) {
            row += &self.embeddings.token.row(id as usize);
        }
        let (mut x, embedding_norm) = layer_norm_forward(&summed, &self.embeddings.norm, eps);
        let embedding_dropout = mode.mask(0, seq, h, c.dropout_rate);
        apply_mask(&mut x, &embedding_dropout);

        let key_bias: Vec<f64> = encoding
            .attention_mask
            .iter()
            .map(|&m| if m == 1 { 0.0 } else { f64::NEG_INFINITY })
            .collect();

        let mut traces = Vec::with_capacity(c.num_layers);
        for (l, layer) in self.layers.iter().enumerate() {
            let q = layer.query.forward(&x.view());
            let k = layer.key.forward(&x.view());
            let v = layer.value.forward(&x.view());
            let mut context = Array2::zeros((seq, h));
            let mut probs = Vec::with_capacity(heads);
            for head in 0..heads {
                let cols = s![.., head * d..(head + 1) * d];
                let mut scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
                for mut row in scores.rows_mut() {
                    for (s, &b) in row.iter_mut().zip(&key_bias) {
                        *s += b;
                    }
                }
                softmax_rows(&mut scores);
                context.slice_mut(cols).assign(&scores.dot(&v.slice(cols)));
                probs.push(scores);
            }
            let mut attn = layer.attention_output.forward(&context.view());
            let attention_dropout = mode.mask(1 + 2 * l as u64, seq, h, c.dropout_rate);
            apply_mask(&mut attn, &attention_dropout);
            let (attended, attention_norm) = layer_norm_forward(&(&x + &attn), &layer.attention_norm, eps);

            let intermediate_pre = layer.intermediate.forward(&attended.view());
            let intermediate = intermediate_pre.mapv(gelu);
            let mut out = layer.output.forward(&intermediate.view());
            let output_dropout = mode.mask(2 + 2 * l as u64, seq, h, c.dropout_rate);
            apply_mask(&mut out, &output_dropout);
            let (next, output_norm) = layer_norm_forward(&(&attended + &out), &layer.output_norm, eps);

            traces.push(LayerTrace {
                input: x,
                query: q,
                key: k,
                value: v,
                probs,
                context,
                attention_dropout,
                attention_norm,
                attended,
                intermediate_pre,
                intermediate,
                output_dropout,
                output_norm,
            });
            x = next;
        }

        Ok(EncoderOutput {
            hidden: x,
            trace: ForwardTrace {
                token_ids: encoding.token_ids.clone(),
                embedding_norm,
                embedding_dropout,
                layers: traces,
            },
        })
    }

    /// Back-propagates `d_hidden` (gradient of the loss w.r.t. the final
    /// hidden states) through the encoder, accumulating into `grads`.
    pub fn backward(&self, trace: &ForwardTrace, d_hidden: &Array2<f64>, grads: &mut ModelParams) {
        let c = &self.config;
        let heads = c.num_heads;
        let d = c.head_size();
        let scale = 1.0 / (d as f64).sqrt();
        let mut d_x = d_hidden.clone();

        for (l, layer) in self.layers.iter().enumerate().rev() {
            let t = &trace.layers[l];
            let g = &mut grads.layers[l];

            let d_sum2 = layer_norm_backward(&d_x, &t.output_norm, &layer.output_norm, &mut g.output_norm);
            let mut d_out = d_sum2.clone();
            apply_mask(&mut d_out, &t.output_dropout);
            let d_inter = layer.output.backward(&t.intermediate.view(), &d_out, &mut g.output);
            let d_pre = &d_inter * &t.intermediate_pre.mapv(gelu_derivative);
            let mut d_attended = d_sum2;
            d_attended += &layer.intermediate.backward(&t.attended.view(), &d_pre, &mut g.intermediate);

            let d_sum1 = layer_norm_backward(
                &d_attended,
                &t.attention_norm,
                &layer.attention_norm,
                &mut g.attention_norm,
            );
            let mut d_attn = d_sum1.clone();
            apply_mask(&mut d_attn, &t.attention_dropout);
            let d_context = layer
                .attention_output
                .backward(&t.context.view(), &d_attn, &mut g.attention_output);

            let mut d_q = Array2::zeros(t.query.raw_dim());
            let mut d_k = Array2::zeros(t.key.raw_dim());
            let mut d_v = Array2::zeros(t.value.raw_dim());
            for head in 0..heads {
                let cols = s![.., head * d..(head + 1) * d];
                let p = &t.probs[head];
                let d_ctx = d_context.slice(cols);
                let d_p = d_ctx.dot(&t.value.slice(cols).t());
                d_v.slice_mut(cols).assign(&p.t().dot(&d_ctx));
                let row_dot = (&d_p * p).sum_axis(Axis(1)).insert_axis(Axis(1));
                let d_scores = p * &(&d_p - &row_dot) * scale;
                d_q.slice_mut(cols).assign(&d_scores.dot(&t.key.slice(cols)));
                d_k.slice_mut(cols).assign(&d_scores.t().dot(&t.query.slice(cols)));
            }
            let input = t.input.view();
            let mut d_input = d_sum1;
            d_input += &layer.query.backward(&input, &d_q, &mut g.query);
            d_input += &layer.key.backward(&input, &d_k, &mut g.key);
            d_input += &layer.value.backward(&input, &d_v, &mut g.value);
            d_x = d_input;
        }

        apply_mask(&mut d_x, &trace.embedding_dropout);
        let d_summed = layer_norm_backward(
            &d_x,
            &trace.embedding_norm,
            &self.embeddings.norm,
            &mut grads.embeddings.norm,
        );
        let seq = d_summed.nrows();
        grads
            .embeddings
            .position
            .slice_mut(s![..seq, ..])
            .scaled_add(1.0, &d_summed);
        for (row, &id) in d_summed.rows().into_iter().zip(&trace.token_ids) {
            let mut target = grads.embeddings.token.row_mut(id as usize);
            target += &row;
        }
    }
}
