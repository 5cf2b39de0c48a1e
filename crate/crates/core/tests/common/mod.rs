#![allow(dead_code)]
pub mod synthetic;

use std::collections::BTreeMap;

use legal_lm::encoder::{EncoderConfig, Mode, ModelParams, Objective, ParamKind};
use legal_lm::tokenizer::Encoding;

/// Toy configuration used by the gradient checks.
pub fn toy_config() -> EncoderConfig {
    EncoderConfig::new(1, 4, 1, 261).with_max_positions(8)
}

/// Initialized parameters pushed away from the near-linear regime so every
/// nonlinearity contributes to the gradient.
pub fn perturbed_params(config: &EncoderConfig, seed: u64, num_classes: Option<usize>) -> ModelParams {
    let mut p = ModelParams::init(config, seed).unwrap();
    if let Some(n) = num_classes {
        p.attach_classifier(n, seed + 1).unwrap();
    }
    for (i, t) in p.tensors_mut().into_iter().enumerate() {
        for (j, v) in t.data.iter_mut().enumerate() {
            let wobble = ((i * 37 + j * 11) % 17) as f64 / 17.0 - 0.5;
            *v = match t.kind {
                ParamKind::Weight => *v * 20.0,
                ParamKind::NormScale => 1.0 + 0.4 * wobble,
                _ => 0.3 * wobble,
            };
        }
    }
    p
}

/// Central-difference gradient of `loss` for every scalar parameter,
/// grouped by tensor name. Independent of the backward pass: it only calls
/// the forward loss.
pub fn finite_difference_gradients(
    params: &ModelParams,
    encoding: &Encoding,
    objective: Objective<'_>,
    mode: Mode,
    step: f64,
) -> BTreeMap<String, Vec<f64>> {
    let mut work = params.clone();
    let names: Vec<(String, usize)> = params
        .tensors()
        .into_iter()
        .map(|t| (t.name, t.data.len()))
        .collect();
    let mut out = BTreeMap::new();
    for (ti, (name, len)) in names.into_iter().enumerate() {
        let mut grads = Vec::with_capacity(len);
        for j in 0..len {
            let original = params.tensors()[ti].data[j];
            work.tensors_mut()[ti].data[j] = original + step;
            let plus = work.loss(encoding, objective, mode).unwrap();
            work.tensors_mut()[ti].data[j] = original - step;
            let minus = work.loss(encoding, objective, mode).unwrap();
            work.tensors_mut()[ti].data[j] = original;
            grads.push((plus - minus) / (2.0 * step));
        }
        out.insert(name, grads);
    }
    out
}

/// Largest elementwise relative error per tensor:
/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_errors(
    analytic: &ModelParams,
    numeric: &BTreeMap<String, Vec<f64>>,
    floor: f64,
) -> BTreeMap<String, f64> {
    analytic
        .tensors()
        .into_iter()
        .map(|t| {
            let n = &numeric[&t.name];
            let worst = t
                .data
                .iter()
                .zip(n)
                .map(|(&a, &b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
                .fold(0.0, f64::max);
            (t.name, worst)
        })
        .collect()
}
