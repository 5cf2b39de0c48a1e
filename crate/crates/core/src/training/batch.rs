//! Data-parallel gradient accumulation over one batch.

use rayon::prelude::*;

use crate::encoder::{LossStats, Mode, ModelParams, Objective};
use crate::error::Result;
use crate::rng::rng_from;
use crate::tokenizer::Encoding;
use rand::seq::SliceRandom;

/// Sums `scale`-weighted gradients of every item. Items are processed in
/// parallel and reduced in input order, so the result does not depend on
/// the thread count.
pub(crate) fn batch_gradients<'a>(
    params: &ModelParams,
    items: &[(&'a Encoding, Objective<'a>, Mode)],
    scale: f64,
) -> Result<(ModelParams, LossStats)> {
    let parts: Vec<(ModelParams, LossStats)> = items
        .par_iter()
        .map(|(enc, objective, mode)| {
            let mut grads = params.zeros_like();
            let stats = params.accumulate_gradients(enc, *objective, *mode, scale, &mut grads)?;
            Ok((grads, stats))
        })
        .collect::<Result<_>>()?;
    let mut total = params.zeros_like();
    let mut stats = LossStats::default();
    for (g, s) in &parts {
        total.add_scaled(g, 1.0);
        stats.merge(*s);
    }
    Ok((total, stats))
}

/// Visit order over `len` items that reshuffles at each pass, addressed by
/// a global position so any step can be reproduced without replaying the
/// earlier ones.
pub(crate) struct EpochOrder {
    seed: u64,
    tag: u64,
    len: usize,
    cached: Option<(u64, Vec<usize>)>,
}

impl EpochOrder {
    pub(crate) fn new(seed: u64, tag: u64, len: usize) -> Self {
        Self {
            seed,
            tag,
            len,
            cached: None,
        }
    }

    pub(crate) fn permutation(&mut self, epoch: u64) -> &[usize] {
        if self.cached.as_ref().map(|c| c.0) != Some(epoch) {
            let mut perm: Vec<usize> = (0..self.len).collect();
            perm.shuffle(&mut rng_from(self.seed, &[self.tag, epoch]));
            self.cached = Some((epoch, perm));
        }
        &self.cached.as_ref().expect("just filled").1
    }

    /// Item index at global position `position`.
    pub(crate) fn at(&mut self, position: u64) -> usize {
        let len = self.len as u64;
        self.permutation(position / len)[(position % len) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_epoch_is_a_permutation() {
        let mut order = EpochOrder::new(3, 9, 7);
        for epoch in 0..3u64 {
            let mut seen: Vec<usize> = (0..7).map(|i| order.at(epoch * 7 + i)).collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..7).collect::<Vec<_>>());
        }
        let a = order.permutation(0).to_vec();
        assert_ne!(a, order.permutation(1).to_vec());
        assert_eq!(a, EpochOrder::new(3, 9, 7).permutation(0));
    }
}
