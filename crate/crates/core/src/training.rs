//! Hyperparameters, schedules and logs shared by both trainers.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyper {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Cosine decay ends at `lr * lr_final_fraction`.
    #[serde(default = "default_final_fraction")]
    pub lr_final_fraction: f64,
    #[serde(default = "default_clip")]
    pub grad_clip: f64,
}

fn default_final_fraction() -> f64 {
    0.05
}

fn default_clip() -> f64 {
    10.0
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            lr: 2e-3,
            batch: 100,
            epochs: 30,
            seed: 0,
            lr_final_fraction: default_final_fraction(),
            grad_clip: default_clip(),
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::config("hyper.lr must be positive"));
        }
        if self.batch == 0 {
            return Err(Error::config("hyper.batch must be at least 1"));
        }
        if !(self.lr_final_fraction > 0.0 && self.lr_final_fraction <= 1.0) {
            return Err(Error::config("hyper.lr_final_fraction must lie in (0, 1]"));
        }
        if self.grad_clip.is_nan() || self.grad_clip <= 0.0 {
            return Err(Error::config("hyper.grad_clip must be positive"));
        }
        Ok(())
    }

    /// Learning rate for `step` out of `total` optimizer steps.
    pub fn lr_at(&self, step: usize, total: usize) -> f64 {
        if total <= 1 {
            return self.lr;
        }
        let t = step as f64 / (total - 1) as f64;
        let cos = 0.5 * (1.0 + (std::f64::consts::PI * t).cos());
        self.lr * (self.lr_final_fraction + (1.0 - self.lr_final_fraction) * cos)
    }

    /// Shuffled minibatches of `0..n` for one epoch; the last batch may be short.
    pub fn batches(&self, n: usize, epoch: usize) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng_from(derive_seed(&[self.seed, tag("shuffle"), epoch as u64])));
        order.chunks(self.batch).map(<[usize]>::to_vec).collect()
    }

    pub fn steps_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.batch)
    }
}

/// Per-epoch record stored in checkpoints. Holds no wall-clock data, so reruns write identical bytes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub seed: u64,
    pub epochs: usize,
    pub train_loss: Vec<f64>,
    pub val_nmse_db: Vec<f64>,
    /// Mean estimated bits per sample (digital only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub train_bits: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_endpoints() {
        let h = Hyper { lr: 1.0, lr_final_fraction: 0.1, ..Hyper::default() };
        assert!((h.lr_at(0, 11) - 1.0).abs() < 1e-12);
        assert!((h.lr_at(10, 11) - 0.1).abs() < 1e-12);
        assert!(h.lr_at(5, 11) < 1.0 && h.lr_at(5, 11) > 0.1);
    }

    #[test]
    fn batches_cover_every_index_once() {
        let h = Hyper { batch: 7, ..Hyper::default() };
        let b = h.batches(30, 2);
        assert_eq!(b.len(), 5);
        let mut all: Vec<usize> = b.concat();
        all.sort();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
        assert_eq!(b, h.batches(30, 2));
        assert_ne!(b, h.batches(30, 3));
    }
}
