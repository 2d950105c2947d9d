//! Minimal convolutional network toolkit with hand-written backward passes.
//!
//! Activations are NHWC batches ([`Act`]); every layer caches what it needs
//! during a [`Mode::Train`] forward pass and consumes it in `backward`.

mod activation;
mod conv;
mod dense;
mod layer;
mod norm;
mod optim;
mod param;
mod store;
mod tensor;

pub use activation::PRelu;
pub use conv::{col2im, im2col, Conv2d, ConvGeom, ConvTranspose2d};
pub use dense::Dense;
pub use layer::{Layer, Mode, Residual, Sequential};
pub use norm::BatchNorm;
pub use optim::{clip_grad_norm, grad_norm_sq, Adam};
pub use param::{join, Param, ParamVisitor};
pub use store::{read_weights, snapshot, write_weights, WeightEntry};
pub use tensor::{Act, Real};

/// Anything exposing a parameter tree.
pub trait Model<T: Real> {
    fn visit_params(&mut self, f: &mut ParamVisitor<'_, T>);

    fn zero_grad(&mut self) {
        self.visit_params(&mut |_, p| p.zero_grad());
    }

    fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |_, p| {
            if p.trainable {
                n += p.value.len()
            }
        });
        n
    }
}

impl<T: Real> Model<T> for Sequential<T> {
    fn visit_params(&mut self, f: &mut ParamVisitor<'_, T>) {
        self.visit("", f);
    }
}

#[cfg(test)]
mod gradcheck {
    //! Central finite differences against every layer's backward pass, in f64.

    use ndarray::Array2;
    use rand::Rng;

    use super::*;
    use crate::rng::rng_from;

    fn random_act(n: usize, h: usize, w: usize, c: usize, seed: u64) -> Act<f64> {
        let mut rng = rng_from(seed);
        Act::new(Array2::from_shape_fn((n * h * w, c), |_| rng.random_range(-1.0..1.0)), n, h, w)
    }

    /// Loss = <probe, net(x)>; checks d/dx and d/dθ on a handful of coordinates.
    fn check(net: &mut Sequential<f64>, x: Act<f64>, seed: u64) {
        let y = net.forward(&x, Mode::Train);
        let mut rng = rng_from(seed ^ 0xabc);
        let probe = Array2::from_shape_fn(y.data.raw_dim(), |_| rng.random_range(-1.0..1.0));
        net.zero_grad();
        let gy = Act::new(probe.clone(), y.n, y.h, y.w);
        let gx = net.backward(&gy);
        let loss = |net: &mut Sequential<f64>, x: &Act<f64>| -> f64 {
            let y = net.forward(x, Mode::Train);
            (&y.data * &probe).sum()
        };
        let eps = 1e-5;
        let close = |fd: f64, an: f64| (fd - an).abs() <= 1e-6 + 1e-4 * fd.abs().max(an.abs());
        for k in (0..x.data.len()).step_by(x.data.len() / 7 + 1) {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp.data.as_slice_mut().unwrap()[k] += eps;
            xm.data.as_slice_mut().unwrap()[k] -= eps;
            let fd = (loss(net, &xp) - loss(net, &xm)) / (2.0 * eps);
            let an = gx.data.as_slice().unwrap()[k];
            assert!(close(fd, an), "input coord {k}: fd {fd} vs analytic {an}");
        }
        let grads = {
            let mut g = Vec::new();
            net.visit_params(&mut |name, p| {
                if p.trainable {
                    g.push((name.to_string(), p.grad.clone()))
                }
            });
            g
        };
        for (name, grad) in grads {
            for k in (0..grad.len()).step_by(grad.len() / 5 + 1) {
                let bump = |delta: f64, net: &mut Sequential<f64>| {
                    net.visit_params(&mut |n, p| {
                        if n == name {
                            p.value.as_slice_mut().unwrap()[k] += delta;
                        }
                    })
                };
                bump(eps, net);
                let lp = loss(net, &x);
                bump(-2.0 * eps, net);
                let lm = loss(net, &x);
                bump(eps, net);
                let fd = (lp - lm) / (2.0 * eps);
                let an = grad.as_slice().unwrap()[k];
                assert!(close(fd, an), "{name}[{k}]: fd {fd} vs analytic {an}");
            }
        }
    }

    #[test]
    fn conv_bn_prelu_stack() {
        let mut net = Sequential::new();
        net.push("c1", Conv2d::new(2, 4, (3, 3), (2, 2), 1, "c1"));
        net.push("bn1", BatchNorm::new(4));
        net.push("a1", PRelu::new(4));
        net.push("c2", Conv2d::new(4, 3, (5, 5), (2, 1), 2, "c2"));
        check(&mut net, random_act(3, 8, 4, 2, 9), 1);
    }

    #[test]
    fn transposed_conv_and_residual() {
        let mut body = Sequential::new();
        body.push("c", Conv2d::new(3, 3, (3, 3), (1, 1), 4, "c"));
        body.push("bn", BatchNorm::new(3));
        let mut net = Sequential::new();
        net.push("up", ConvTranspose2d::new(2, 3, (5, 5), (2, 2), 3, "up"));
        net.push("res", Residual::new(body, Some(Box::new(PRelu::new(3)))));
        check(&mut net, random_act(2, 3, 2, 2, 5), 2);
    }

    #[test]
    fn dense_projection_round_trip_shape() {
        let mut net = Sequential::new();
        net.push("d1", Dense::new(4 * 2 * 3, (1, 1, 5), 7, "d1"));
        net.push("a", PRelu::new(5));
        net.push("d2", Dense::new(5, (4, 2, 3), 8, "d2"));
        let x = random_act(3, 4, 2, 3, 6);
        check(&mut net, x.clone(), 3);
        assert_eq!(net.forward(&x, Mode::Eval).shape(), [3, 4, 2, 3]);
    }

    #[test]
    fn weights_round_trip_through_f32_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut net: Sequential<f32> = Sequential::new();
        net.push("c", Conv2d::new(2, 4, (3, 3), (1, 1), 11, "c"));
        net.push("bn", BatchNorm::new(4));
        let path = dir.path().join("w.bin");
        let index = write_weights(&mut net, &path).unwrap();
        let mut other: Sequential<f32> = Sequential::new();
        other.push("c", Conv2d::new(2, 4, (3, 3), (1, 1), 12, "c"));
        other.push("bn", BatchNorm::new(4));
        read_weights(&mut other, &path, &index).unwrap();
        let a = snapshot(&mut net);
        let b = snapshot(&mut other);
        assert_eq!(a, b);
        let mut wrong: Sequential<f32> = Sequential::new();
        wrong.push("c", Conv2d::new(2, 5, (3, 3), (1, 1), 12, "c"));
        assert!(read_weights(&mut wrong, &path, &index).is_err());
    }

    #[test]
    fn adam_reduces_a_quadratic() {
        let mut net: Sequential<f64> = Sequential::new();
        net.push("d", Dense::new(3, (1, 1, 1), 1, "d"));
        let x = Act::from_rows(Array2::from_shape_vec((2, 3), vec![1.0, 2.0, 3.0, -1.0, 0.5, 0.0]).unwrap());
        let target = [2.0, -1.0];
        let mut opt = Adam::new(0.05);
        let mut last = f64::INFINITY;
        for _ in 0..300 {
            let y = net.forward(&x, Mode::Train);
            let diff: Vec<f64> = y.data.iter().zip(target).map(|(a, b)| a - b).collect();
            last = diff.iter().map(|d| d * d).sum();
            let g = Act::from_rows(Array2::from_shape_vec((2, 1), diff.iter().map(|d| 2.0 * d).collect()).unwrap());
            net.backward(&g);
            opt.step(&mut net);
        }
        assert!(last < 1e-6, "loss {last}");
    }
}
