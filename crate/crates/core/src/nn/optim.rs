use ndarray::Array2;

use super::param::ParamVisitor;
use super::tensor::Real;
use super::Model;

/// Adam with bias correction. Moment buffers follow the visiting order of the model's parameters.
pub struct Adam<T: Real> {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    moments: Vec<(Array2<T>, Array2<T>)>,
}

impl<T: Real> Adam<T> {
    pub fn new(lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, moments: Vec::new() }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// Applies one update from the accumulated gradients, then clears them.
    pub fn step(&mut self, model: &mut impl Model<T>) {
        self.step += 1;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let lr_t = T::of(self.lr * c2.sqrt() / c1);
        let eps = T::of(self.eps * c2.sqrt());
        let moments = &mut self.moments;
        let mut k = 0;
        let mut update: Box<ParamVisitor<'_, T>> = Box::new(|_, p| {
            if !p.trainable {
                return;
            }
            if moments.len() == k {
                moments.push((Array2::zeros(p.value.raw_dim()), Array2::zeros(p.value.raw_dim())));
            }
            let (m, v) = &mut moments[k];
            ndarray::Zip::from(&mut p.value).and(&mut p.grad).and(m).and(v).for_each(|w, g, m, v| {
                *m = b1 * *m + (T::one() - b1) * *g;
                *v = b2 * *v + (T::one() - b2) * *g * *g;
                *w = *w - lr_t * *m / (v.sqrt() + eps);
                *g = T::zero();
            });
            k += 1;
        });
        model.visit_params(&mut *update);
    }
}

/// Sum of squared gradients over trainable parameters.
pub fn grad_norm_sq<T: Real>(model: &mut impl Model<T>) -> f64 {
    let mut total = 0.0;
    model.visit_params(&mut |_, p| {
        if p.trainable {
            total += p.grad.iter().map(|g| g.f64() * g.f64()).sum::<f64>();
        }
    });
    total
}

/// Rescales gradients so their global norm does not exceed `max_norm`.
pub fn clip_grad_norm<T: Real>(model: &mut impl Model<T>, max_norm: f64) -> f64 {
    let norm = grad_norm_sq(model).sqrt();
    if norm > max_norm {
        let s = T::of(max_norm / norm);
        model.visit_params(&mut |_, p| {
            if p.trainable {
                p.grad.mapv_inplace(|g| g * s);
            }
        });
    }
    norm
}
