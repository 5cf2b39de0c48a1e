//! Row-wise kernels shared by the encoder and its heads.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::params::{Dense, LayerNorm};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Exact GELU, `x * Φ(x)`.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / SQRT_2))
}

pub fn gelu_derivative(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x / SQRT_2));
    cdf + x * INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// In-place softmax over each row. `-inf` entries get probability zero.
pub fn softmax_rows(x: &mut Array2<f64>) {
    for mut row in x.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// Cached normalized input and inverse standard deviation per row.
#[derive(Debug, Clone)]
pub struct NormCache {
    pub normalized: Array2<f64>,
    pub inv_std: Array1<f64>,
}

pub fn layer_norm_forward(x: &Array2<f64>, norm: &LayerNorm, eps: f64) -> (Array2<f64>, NormCache) {
    let width = x.ncols() as f64;
    let mut normalized = x.clone();
    let mut inv_std = Array1::zeros(x.nrows());
    for (mut row, inv) in normalized.rows_mut().into_iter().zip(inv_std.iter_mut()) {
        let mean = row.sum() / width;
        row.mapv_inplace(|v| v - mean);
        let var = row.fold(0.0, |acc, &v| acc + v * v) / width;
        *inv = 1.0 / (var + eps).sqrt();
        let s = *inv;
        row.mapv_inplace(|v| v * s);
    }
    let out = &normalized * &norm.gamma + &norm.beta;
    (out, NormCache { normalized, inv_std })
}

/// Returns the input gradient and accumulates scale/shift gradients.
pub fn layer_norm_backward(
    d_out: &Array2<f64>,
    cache: &NormCache,
    norm: &LayerNorm,
    grad: &mut LayerNorm,
) -> Array2<f64> {
    grad.gamma += &(d_out * &cache.normalized).sum_axis(Axis(0));
    grad.beta += &d_out.sum_axis(Axis(0));
    let width = d_out.ncols() as f64;
    let mut d_x = d_out * &norm.gamma;
    for ((mut row, xhat), &inv) in d_x
        .rows_mut()
        .into_iter()
        .zip(cache.normalized.rows())
        .zip(cache.inv_std.iter())
    {
        let mean_d = row.sum() / width;
        let mean_dx = row.dot(&xhat) / width;
        Zip::from(&mut row)
            .and(&xhat)
            .for_each(|d, &xh| *d = inv * (*d - mean_d - xh * mean_dx));
    }
    d_x
}

impl Dense {
    pub fn forward(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    pub fn backward(&self, x: &ArrayView2<f64>, d_out: &Array2<f64>, grad: &mut Dense) -> Array2<f64> {
        grad.weight += &x.t().dot(d_out);
        grad.bias += &d_out.sum_axis(Axis(0));
        d_out.dot(&self.weight.t())
    }
}

/// Inverted-dropout mask: entries are 0 or `1 / (1 - rate)`.
pub fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let keep = 1.0 / (1.0 - rate);
    Array2::from_shape_simple_fn((rows, cols), || {
        if rng.random::<f64>() < rate {
            0.0
        } else {
            keep
        }
    })
}

/// Cross-entropy of one logit row against `target`; returns the loss and
/// writes `softmax - onehot` into `grad`.
pub fn cross_entropy(logits: ndarray::ArrayView1<f64>, target: usize, grad: ndarray::ArrayViewMut1<f64>) -> f64 {
    let max = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let sum: f64 = logits.iter().map(|&v| (v - max).exp()).sum();
    let log_z = max + sum.ln();
    let mut grad = grad;
    Zip::from(&mut grad)
        .and(&logits)
        .for_each(|g, &l| *g = (l - log_z).exp());
    grad[target] -= 1.0;
    log_z - logits[target]
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn gelu_values() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(1.0) - 0.841_344_746_068_543).abs() < 1e-12);
        let h = 1e-6;
        for x in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_derivative(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn softmax_ignores_negative_infinity() {
        let mut x = array![[1.0, f64::NEG_INFINITY, 1.0]];
        softmax_rows(&mut x);
        assert_eq!(x, array![[0.5, 0.0, 0.5]]);
    }

    #[test]
    fn cross_entropy_gradient() {
        let logits = array![0.3, -1.2, 2.0];
        let mut g = Array1::zeros(3);
        let loss = cross_entropy(logits.view(), 2, g.view_mut());
        let z: f64 = logits.iter().map(|v: &f64| v.exp()).sum();
        assert!((loss - (z.ln() - 2.0)).abs() < 1e-12);
        assert!(g.sum().abs() < 1e-12);
        assert!(g[2] < 0.0);
    }
}
