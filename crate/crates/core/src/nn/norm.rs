use ndarray::{Array1, Array2, Axis};

use super::layer::{Layer, Mode};
use super::param::{join, Param, ParamVisitor};
use super::tensor::{Act, Real};

/// Per-channel batch normalization over all batch and spatial positions.
pub struct BatchNorm<T: Real> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Param<T>,
    pub running_var: Param<T>,
    momentum: f64,
    eps: f64,
    cache: Option<Cache<T>>,
}

struct Cache<T> {
    xhat: Array2<T>,
    inv_std: Array1<T>,
    /// Statistics came from the batch (and so depend on the input).
    batch: bool,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(c: usize) -> Self {
        Self {
            gamma: Param::new(Array2::ones((1, c))),
            beta: Param::new(Array2::zeros((1, c))),
            running_mean: Param::buffer(Array2::zeros((1, c))),
            running_var: Param::buffer(Array2::ones((1, c))),
            momentum: 0.01,
            eps: 1e-5,
            cache: None,
        }
    }
}

impl<T: Real> Layer<T> for BatchNorm<T> {
    fn forward(&mut self, x: &Act<T>, mode: Mode) -> Act<T> {
        let eps = T::of(self.eps);
        let m = x.data.nrows();
        let (mean, var, training) = if mode == Mode::Train && m > 1 {
            let mean = x.data.mean_axis(Axis(0)).expect("non-empty batch");
            let centered = &x.data - &mean;
            let var = (&centered * &centered).mean_axis(Axis(0)).expect("non-empty batch");
            let mom = T::of(self.momentum);
            let unbias = T::of(m as f64 / (m - 1) as f64);
            let mut rm = self.running_mean.value.row_mut(0);
            rm.zip_mut_with(&mean, |r, &b| *r = *r * (T::one() - mom) + b * mom);
            let mut rv = self.running_var.value.row_mut(0);
            rv.zip_mut_with(&var, |r, &b| *r = *r * (T::one() - mom) + b * unbias * mom);
            (mean, var, true)
        } else {
            (self.running_mean.value.row(0).to_owned(), self.running_var.value.row(0).to_owned(), false)
        };
        let inv_std = var.mapv(|v| T::one() / (v + eps).sqrt());
        let xhat = (&x.data - &mean) * &inv_std;
        let y = &xhat * &self.gamma.value.row(0) + self.beta.value.row(0);
        if mode == Mode::Train {
            self.cache = Some(Cache { xhat, inv_std, batch: training });
        }
        Act::new(y, x.n, x.h, x.w)
    }

    fn backward(&mut self, grad: &Act<T>) -> Act<T> {
        let gamma = self.gamma.value.row(0).to_owned();
        let dy = &grad.data;
        let Cache { xhat, inv_std, batch } = self.cache.take().expect("backward without a training forward");
        let sum_dy = dy.sum_axis(Axis(0));
        let sum_dy_xhat = (dy * &xhat).sum_axis(Axis(0));
        self.gamma.grad.row_mut(0).zip_mut_with(&sum_dy_xhat, |g, &v| *g += v);
        self.beta.grad.row_mut(0).zip_mut_with(&sum_dy, |g, &v| *g += v);
        let dx = if batch {
            let m = T::of(dy.nrows() as f64);
            let scale = &gamma * &inv_std / m;
            (dy * m - &sum_dy - &xhat * &sum_dy_xhat) * &scale
        } else {
            dy * &(&gamma * &inv_std)
        };
        Act::new(dx, grad.n, grad.h, grad.w)
    }

    fn visit(&mut self, prefix: &str, f: &mut ParamVisitor<'_, T>) {
        f(&join(prefix, "gamma"), &mut self.gamma);
        f(&join(prefix, "beta"), &mut self.beta);
        f(&join(prefix, "running_mean"), &mut self.running_mean);
        f(&join(prefix, "running_var"), &mut self.running_var);
    }
}
