use ndarray::{Array2, Axis, Zip};

use super::layer::{Layer, Mode};
use super::param::{join, Param, ParamVisitor};
use super::tensor::{Act, Real};

/// Parametric ReLU with one learned negative slope per channel.
pub struct PRelu<T: Real> {
    pub alpha: Param<T>,
    cache: Option<Array2<T>>,
}

impl<T: Real> PRelu<T> {
    pub fn new(c: usize) -> Self {
        Self { alpha: Param::new(Array2::from_elem((1, c), T::of(0.25))), cache: None }
    }
}

impl<T: Real> Layer<T> for PRelu<T> {
    fn forward(&mut self, x: &Act<T>, mode: Mode) -> Act<T> {
        let alpha = self.alpha.value.row(0);
        let mut y = x.data.clone();
        for mut row in y.rows_mut() {
            row.zip_mut_with(&alpha, |v, &a| {
                if *v < T::zero() {
                    *v = *v * a;
                }
            });
        }
        if mode == Mode::Train {
            self.cache = Some(x.data.clone());
        }
        Act::new(y, x.n, x.h, x.w)
    }

    fn backward(&mut self, grad: &Act<T>) -> Act<T> {
        let x = self.cache.take().expect("backward without a training forward");
        let alpha = self.alpha.value.row(0).to_owned();
        let mut dx = grad.data.clone();
        let mut dalpha = Array2::<T>::zeros((1, x.ncols()));
        for (mut drow, xrow) in dx.axis_iter_mut(Axis(0)).zip(x.axis_iter(Axis(0))) {
            Zip::from(&mut drow).and(&xrow).and(&alpha).and(dalpha.row_mut(0)).for_each(|d, &xv, &a, da| {
                if xv < T::zero() {
                    *da += *d * xv;
                    *d = *d * a;
                }
            });
        }
        self.alpha.grad += &dalpha;
        Act::new(dx, grad.n, grad.h, grad.w)
    }

    fn visit(&mut self, prefix: &str, f: &mut ParamVisitor<'_, T>) {
        f(&join(prefix, "alpha"), &mut self.alpha);
    }
}
