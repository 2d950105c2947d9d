use ndarray::Array2;

use super::layer::{Layer, Mode};
use super::param::{join, Param, ParamVisitor};
use super::tensor::{Act, Real};

/// Fully connected map over the flattened feature map of each batch item.
/// Used as the full-extent projection into and out of the bottleneck.
pub struct Dense<T: Real> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    out_hwc: (usize, usize, usize),
    cache: Option<(Array2<T>, [usize; 4])>,
}

impl<T: Real> Dense<T> {
    /// Maps `in_len` flattened inputs to an `(h, w, c)` output map.
    pub fn new(in_len: usize, out_hwc: (usize, usize, usize), seed: u64, name: &str) -> Self {
        let out_len = out_hwc.0 * out_hwc.1 * out_hwc.2;
        Self {
            weight: Param::he_uniform(in_len, out_len, in_len, seed, name),
            bias: Param::new(Array2::zeros((1, out_len))),
            out_hwc,
            cache: None,
        }
    }

    /// Glorot-style scaling for a linear output.
    pub fn linear_init(mut self) -> Self {
        let (fan_in, fan_out) = self.weight.value.dim();
        let s = T::of((2.0 / (fan_in + fan_out) as f64 * fan_in as f64 / 6.0).sqrt());
        self.weight.value.mapv_inplace(|v| v * s);
        self
    }
}

impl<T: Real> Layer<T> for Dense<T> {
    fn forward(&mut self, x: &Act<T>, mode: Mode) -> Act<T> {
        let flat = x.flatten();
        let mut y = flat.dot(&self.weight.value);
        y += &self.bias.value.row(0);
        if mode == Mode::Train {
            self.cache = Some((flat, x.shape()));
        }
        let (h, w, c) = self.out_hwc;
        Act::unflatten(y, h, w, c)
    }

    fn backward(&mut self, grad: &Act<T>) -> Act<T> {
        let (flat, [_, h, w, c]) = self.cache.take().expect("backward without a training forward");
        let g = grad.flatten();
        self.weight.grad += &flat.t().dot(&g);
        self.bias.grad += &g.sum_axis(ndarray::Axis(0)).insert_axis(ndarray::Axis(0));
        Act::unflatten(g.dot(&self.weight.value.t()), h, w, c)
    }

    fn visit(&mut self, prefix: &str, f: &mut ParamVisitor<'_, T>) {
        f(&join(prefix, "weight"), &mut self.weight);
        f(&join(prefix, "bias"), &mut self.bias);
    }
}
