//! Linear warmup followed by linear decay to zero.

use crate::error::{Error, Result};

/// `base·step/warmup` while warming up, then `base·(total−step)/(total−warmup)`.
pub fn linear_warmup_lr(step: u64, warmup: u64, total: u64, base_lr: f64) -> Result<f64> {
    if warmup >= total {
        return Err(Error::InvalidConfig(format!(
            "warmup ({warmup}) must be smaller than total steps ({total})"
        )));
    }
    if step > total {
        return Err(Error::OutOfRange(format!("step {step} beyond total {total}")));
    }
    Ok(if step < warmup {
        base_lr * step as f64 / warmup as f64
    } else {
        base_lr * (total - step) as f64 / (total - warmup) as f64
    })
}

/// Like [`linear_warmup_lr`], but a warmup that does not finish within
/// `total` keeps rising linearly instead of being rejected. Used for
/// fine-tuning, where a long fixed warmup meets a short run.
pub fn clamped_warmup_lr(step: u64, warmup: u64, total: u64, base_lr: f64) -> Result<f64> {
    if warmup >= total {
        if step > total {
            return Err(Error::OutOfRange(format!("step {step} beyond total {total}")));
        }
        return Ok(base_lr * step as f64 / warmup as f64);
    }
    linear_warmup_lr(step, warmup, total, base_lr)
}
