use ndarray::Array2;
use rand::Rng;

use super::tensor::Real;
use crate::rng::{derive_seed, rng_from, tag};

/// A named parameter array with its gradient accumulator.
///
/// Non-trainable entries (batch-norm running statistics) are saved with the
/// checkpoint but skipped by the optimizer.
#[derive(Debug, Clone)]
pub struct Param<T> {
    pub value: Array2<T>,
    pub grad: Array2<T>,
    pub trainable: bool,
}

impl<T: Real> Param<T> {
    pub fn new(value: Array2<T>) -> Self {
        let grad = Array2::zeros(value.raw_dim());
        Self { value, grad, trainable: true }
    }

    pub fn buffer(value: Array2<T>) -> Self {
        Self { trainable: false, ..Self::new(value) }
    }

    /// Uniform in `±sqrt(6 / fan_in)` (He initialization for PReLU-family nets).
    pub fn he_uniform(rows: usize, cols: usize, fan_in: usize, seed: u64, name: &str) -> Self {
        let mut rng = rng_from(derive_seed(&[seed, tag(name)]));
        let bound = (6.0 / fan_in as f64).sqrt();
        Self::new(Array2::from_shape_fn((rows, cols), |_| T::of(rng.random_range(-bound..bound))))
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}

/// Visitor over every parameter of a layer tree, with a dotted path name.
pub type ParamVisitor<'a, T> = dyn FnMut(&str, &mut Param<T>) + 'a;

pub fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}
