use ndarray::{Array1, Array2, Axis};

use super::model::{Mode, CLASSIFIER_DROPOUT_SITE};
use super::ops::{gelu, gelu_derivative, layer_norm_backward, layer_norm_forward, NormCache};
use super::params::ModelParams;
use crate::error::{Error, Result};

/// Dropout rate between the pooler and the output layer of the classifier.
pub const CLASSIFIER_DROPOUT: f64 = 0.1;

pub struct MlmTrace {
    positions: Vec<usize>,
    selected: Array2<f64>,
    transform_pre: Array2<f64>,
    norm: NormCache,
    normalized: Array2<f64>,
}

pub struct ClassifierTrace {
    pooled_input: Array2<f64>,
    pooled: Array2<f64>,
    dropout: Option<Array2<f64>>,
    dropped: Array2<f64>,
}

impl ModelParams {
    fn output_embeddings(&self) -> &Array2<f64> {
        self.mlm.decoder.as_ref().unwrap_or(&self.embeddings.token)
    }

    /// Vocabulary logits (one row per requested position): dense + GELU +
    /// layer norm, then the output projection and bias.
    pub fn mlm_logits(&self, hidden: &Array2<f64>, positions: &[usize]) -> Result<(Array2<f64>, MlmTrace)> {
        if let Some(&p) = positions.iter().find(|&&p| p >= hidden.nrows()) {
            return Err(Error::OutOfRange(format!(
                "position {p} outside sequence of length {}",
                hidden.nrows()
            )));
        }
        let selected = hidden.select(Axis(0), positions);
        let transform_pre = self.mlm.transform.forward(&selected.view());
        let transform = transform_pre.mapv(gelu);
        let (normalized, norm) = layer_norm_forward(&transform, &self.mlm.norm, self.config.layer_norm_epsilon);
        let logits = normalized.dot(&self.output_embeddings().t()) + &self.mlm.bias;
        Ok((
            logits,
            MlmTrace {
                positions: positions.to_vec(),
                selected,
                transform_pre,
                norm,
                normalized,
            },
        ))
    }

    /// Returns the gradient w.r.t. the full hidden-state matrix (rows not in
    /// `positions` are zero) and accumulates head gradients. With tied
    /// embeddings the projection gradient lands in the token embeddings.
    pub fn mlm_backward(
        &self,
        trace: &MlmTrace,
        d_logits: &Array2<f64>,
        seq_len: usize,
        grads: &mut ModelParams,
    ) -> Array2<f64> {
        grads.mlm.bias += &d_logits.sum_axis(Axis(0));
        let d_projection = d_logits.t().dot(&trace.normalized);
        match grads.mlm.decoder.as_mut() {
            Some(dec) => *dec += &d_projection,
            None => grads.embeddings.token += &d_projection,
        }
        let d_normalized = d_logits.dot(self.output_embeddings());
        let d_transform = layer_norm_backward(&d_normalized, &trace.norm, &self.mlm.norm, &mut grads.mlm.norm);
        let d_pre = &d_transform * &trace.transform_pre.mapv(gelu_derivative);
        let d_selected = self
            .mlm
            .transform
            .backward(&trace.selected.view(), &d_pre, &mut grads.mlm.transform);
        let mut d_hidden = Array2::zeros((seq_len, self.config.hidden_size));
        for (row, &p) in d_selected.rows().into_iter().zip(&trace.positions) {
            let mut target = d_hidden.row_mut(p);
            target += &row;
        }
        d_hidden
    }

    /// Class logits from the sequence-start hidden state: dense + tanh,
    /// dropout (training only), dense.
    pub fn classifier_logits(&self, hidden: &Array2<f64>, mode: Mode) -> Result<(Array1<f64>, ClassifierTrace)> {
        let head = self
            .classifier
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("model has no classification head".into()))?;
        let pooled_input = hidden.slice(ndarray::s![0..1, ..]).to_owned();
        let pooled = head.pooler.forward(&pooled_input.view()).mapv(f64::tanh);
        let dropout = mode.mask(CLASSIFIER_DROPOUT_SITE, 1, pooled.ncols(), CLASSIFIER_DROPOUT);
        let dropped = match &dropout {
            Some(m) => &pooled * m,
            None => pooled.clone(),
        };
        let logits = head.output.forward(&dropped.view()).row(0).to_owned();
        Ok((
            logits,
            ClassifierTrace {
                pooled_input,
                pooled,
                dropout,
                dropped,
            },
        ))
    }

    /// Class probabilities (softmax of [`ModelParams::classifier_logits`]).
    pub fn classify(&self, hidden: &Array2<f64>, num_classes: usize, mode: Mode) -> Result<Array1<f64>> {
        let (logits, _) = self.classifier_logits(hidden, mode)?;
        if logits.len() != num_classes {
            return Err(Error::ShapeMismatch(format!(
                "classifier has {} outputs, {num_classes} requested",
                logits.len()
            )));
        }
        Ok(softmax(&logits))
    }

    pub fn classifier_backward(
        &self,
        trace: &ClassifierTrace,
        d_logits: &Array1<f64>,
        seq_len: usize,
        grads: &mut ModelParams,
    ) -> Array2<f64> {
        let head = self.classifier.as_ref().expect("forward succeeded");
        let g = grads.classifier.as_mut().expect("gradient has classifier");
        let d_out = d_logits.view().insert_axis(Axis(0)).to_owned();
        let mut d_pooled = head.output.backward(&trace.dropped.view(), &d_out, &mut g.output);
        if let Some(m) = &trace.dropout {
            d_pooled *= m;
        }
        let d_pre = &d_pooled * &trace.pooled.mapv(|t| 1.0 - t * t);
        let d_first = head.pooler.backward(&trace.pooled_input.view(), &d_pre, &mut g.pooler);
        let mut d_hidden = Array2::zeros((seq_len, self.config.hidden_size));
        d_hidden.row_mut(0).assign(&d_first.row(0));
        d_hidden
    }
}

pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let e = logits.mapv(|v| (v - max).exp());
    let sum = e.sum();
    e / sum
}
