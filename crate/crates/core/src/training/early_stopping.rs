//! Patience-based stopping on a metric that should increase.

/// What the tracker concluded from one epoch's metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    /// New best; keep this epoch's model.
    Improved,
    /// No improvement yet within patience.
    Continue,
    /// Patience exhausted.
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: Option<f64>,
    /// 1-based epoch of `best`.
    pub best_epoch: usize,
    pub epochs_since_improvement: usize,
    pub epoch: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            best_epoch: 0,
            epochs_since_improvement: 0,
            epoch: 0,
        }
    }

    /// Only a strict increase counts as improvement.
    pub fn observe(&mut self, metric: f64) -> StopDecision {
        self.epoch += 1;
        if self.best.is_none_or(|b| metric > b) {
            self.best = Some(metric);
            self.best_epoch = self.epoch;
            self.epochs_since_improvement = 0;
            return StopDecision::Improved;
        }
        self.epochs_since_improvement += 1;
        if self.epochs_since_improvement >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(patience: usize, metrics: &[f64]) -> (usize, usize) {
        let mut es = EarlyStopping::new(patience);
        for (i, &m) in metrics.iter().enumerate() {
            if es.observe(m) == StopDecision::Stop {
                return (i + 1, es.best_epoch);
            }
            assert!(es.epochs_since_improvement <= patience);
        }
        (metrics.len(), es.best_epoch)
    }

    #[test]
    fn plateau_trace() {
        assert_eq!(run(2, &[0.5, 0.6, 0.6, 0.6, 0.9]), (4, 2));
    }

    #[test]
    fn recovery_resets_patience() {
        assert_eq!(run(2, &[0.5, 0.4, 0.6, 0.5, 0.7, 0.7, 0.7]), (7, 5));
    }

    #[test]
    fn never_stops_on_steady_gains() {
        assert_eq!(run(2, &[0.1, 0.2, 0.3]), (3, 3));
    }
}
