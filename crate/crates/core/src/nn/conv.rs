//! Strided 2-D convolution with TensorFlow-style SAME padding, and its
//! transpose used for upsampling. Both lower to one GEMM over an im2col matrix
//! whose columns are ordered `(kernel_row, kernel_col, channel)`.

use ndarray::Array2;

use super::layer::{Layer, Mode};
use super::param::{join, Param, ParamVisitor};
use super::tensor::{Act, Real};

/// Index mapping of a SAME-padded strided convolution from `(h, w)` to `(oh, ow)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub h: usize,
    pub w: usize,
    pub kh: usize,
    pub kw: usize,
    pub sh: usize,
    pub sw: usize,
    pub oh: usize,
    pub ow: usize,
    pad_top: usize,
    pad_left: usize,
}

impl ConvGeom {
    pub fn same(h: usize, w: usize, kh: usize, kw: usize, sh: usize, sw: usize) -> Self {
        let oh = h.div_ceil(sh);
        let ow = w.div_ceil(sw);
        let pad_h = ((oh - 1) * sh + kh).saturating_sub(h);
        let pad_w = ((ow - 1) * sw + kw).saturating_sub(w);
        Self { h, w, kh, kw, sh, sw, oh, ow, pad_top: pad_h / 2, pad_left: pad_w / 2 }
    }

    fn taps(&self) -> usize {
        self.kh * self.kw
    }

    /// Calls `f(output_row, column_offset, input_row)` for every in-bounds tap.
    fn for_each_tap(&self, n: usize, mut f: impl FnMut(usize, usize, usize)) {
        for b in 0..n {
            for oy in 0..self.oh {
                for ox in 0..self.ow {
                    let row = (b * self.oh + oy) * self.ow + ox;
                    for i in 0..self.kh {
                        let iy = (oy * self.sh + i) as isize - self.pad_top as isize;
                        if iy < 0 || iy >= self.h as isize {
                            continue;
                        }
                        for j in 0..self.kw {
                            let ix = (ox * self.sw + j) as isize - self.pad_left as isize;
                            if ix < 0 || ix >= self.w as isize {
                                continue;
                            }
                            let src = (b * self.h + iy as usize) * self.w + ix as usize;
                            f(row, i * self.kw + j, src);
                        }
                    }
                }
            }
        }
    }
}

pub fn im2col<T: Real>(x: &Act<T>, g: &ConvGeom) -> Array2<T> {
    let c = x.c();
    let width = g.taps() * c;
    let mut cols = Array2::zeros((x.n * g.oh * g.ow, width));
    let xs = x.data.as_slice().expect("standard layout");
    let cs = cols.as_slice_mut().expect("standard layout");
    g.for_each_tap(x.n, |row, tap, src| {
        let dst = row * width + tap * c;
        cs[dst..dst + c].copy_from_slice(&xs[src * c..src * c + c]);
    });
    cols
}

/// Adjoint of [`im2col`]: scatter-adds columns back onto the input grid.
pub fn col2im<T: Real>(cols: &Array2<T>, n: usize, c: usize, g: &ConvGeom) -> Act<T> {
    let width = g.taps() * c;
    let mut out = Act::zeros(n, g.h, g.w, c);
    let cs = cols.as_standard_layout();
    let cs = cs.as_slice().expect("standard layout");
    let xs = out.data.as_slice_mut().expect("standard layout");
    g.for_each_tap(n, |row, tap, src| {
        let from = row * width + tap * c;
        for (d, s) in xs[src * c..src * c + c].iter_mut().zip(&cs[from..from + c]) {
            *d += *s;
        }
    });
    out
}

fn add_bias<T: Real>(y: &mut Array2<T>, bias: &Array2<T>) {
    *y += &bias.row(0);
}

fn bias_grad<T: Real>(grad: &Array2<T>) -> Array2<T> {
    grad.sum_axis(ndarray::Axis(0)).insert_axis(ndarray::Axis(0))
}

/// Convolution with `(kh·kw·c_in) × c_out` weights.
pub struct Conv2d<T: Real> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    kernel: (usize, usize),
    stride: (usize, usize),
    /// The network input needs no gradient; skipping it saves a GEMM.
    input_grad: bool,
    cache: Option<(Array2<T>, ConvGeom, usize, usize)>,
}

impl<T: Real> Conv2d<T> {
    pub fn new(
        c_in: usize,
        c_out: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        seed: u64,
        name: &str,
    ) -> Self {
        let fan_in = kernel.0 * kernel.1 * c_in;
        Self {
            weight: Param::he_uniform(fan_in, c_out, fan_in, seed, name),
            bias: Param::new(Array2::zeros((1, c_out))),
            kernel,
            stride,
            input_grad: true,
            cache: None,
        }
    }

    pub fn without_input_grad(mut self) -> Self {
        self.input_grad = false;
        self
    }

    pub fn output_size(&self, h: usize, w: usize) -> (usize, usize) {
        (h.div_ceil(self.stride.0), w.div_ceil(self.stride.1))
    }
}

impl<T: Real> Layer<T> for Conv2d<T> {
    fn forward(&mut self, x: &Act<T>, mode: Mode) -> Act<T> {
        let g = ConvGeom::same(x.h, x.w, self.kernel.0, self.kernel.1, self.stride.0, self.stride.1);
        let cols = im2col(x, &g);
        let mut y = cols.dot(&self.weight.value);
        add_bias(&mut y, &self.bias.value);
        if mode == Mode::Train {
            self.cache = Some((cols, g, x.n, x.c()));
        }
        Act::new(y, x.n, g.oh, g.ow)
    }

    fn backward(&mut self, grad: &Act<T>) -> Act<T> {
        let (cols, g, n, c) = self.cache.take().expect("backward without a training forward");
        self.weight.grad += &cols.t().dot(&grad.data);
        self.bias.grad += &bias_grad(&grad.data);
        if !self.input_grad {
            return Act::zeros(n, g.h, g.w, c);
        }
        let dcols = grad.data.dot(&self.weight.value.t());
        col2im(&dcols, n, c, &g)
    }

    fn visit(&mut self, prefix: &str, f: &mut ParamVisitor<'_, T>) {
        f(&join(prefix, "weight"), &mut self.weight);
        f(&join(prefix, "bias"), &mut self.bias);
    }
}

/// Transposed convolution: upsamples `(h, w)` to `(h·sh, w·sw)`. It is the
/// adjoint of a SAME convolution with the same kernel and stride, with
/// `c_in × (kh·kw·c_out)` weights.
pub struct ConvTranspose2d<T: Real> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    kernel: (usize, usize),
    stride: (usize, usize),
    c_out: usize,
    cache: Option<(Array2<T>, ConvGeom, usize)>,
}

impl<T: Real> ConvTranspose2d<T> {
    pub fn new(
        c_in: usize,
        c_out: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        seed: u64,
        name: &str,
    ) -> Self {
        // each output pixel receives roughly (k/s)² taps of c_in channels
        let fan_in = ((kernel.0 * kernel.1 * c_in) / (stride.0 * stride.1)).max(1);
        Self {
            weight: Param::he_uniform(c_in, kernel.0 * kernel.1 * c_out, fan_in, seed, name),
            bias: Param::new(Array2::zeros((1, c_out))),
            kernel,
            stride,
            c_out,
            cache: None,
        }
    }
}

impl<T: Real> Layer<T> for ConvTranspose2d<T> {
    fn forward(&mut self, x: &Act<T>, mode: Mode) -> Act<T> {
        let g = ConvGeom::same(
            x.h * self.stride.0,
            x.w * self.stride.1,
            self.kernel.0,
            self.kernel.1,
            self.stride.0,
            self.stride.1,
        );
        debug_assert_eq!((g.oh, g.ow), (x.h, x.w));
        let cols = x.data.dot(&self.weight.value);
        let mut y = col2im(&cols, x.n, self.c_out, &g);
        add_bias(&mut y.data, &self.bias.value);
        if mode == Mode::Train {
            self.cache = Some((x.data.clone(), g, x.n));
        }
        y
    }

    fn backward(&mut self, grad: &Act<T>) -> Act<T> {
        let (x, g, n) = self.cache.take().expect("backward without a training forward");
        self.bias.grad += &bias_grad(&grad.data);
        let dcols = im2col(grad, &g);
        self.weight.grad += &x.t().dot(&dcols);
        let dx = dcols.dot(&self.weight.value.t());
        Act::new(dx, n, g.oh, g.ow)
    }

    fn visit(&mut self, prefix: &str, f: &mut ParamVisitor<'_, T>) {
        f(&join(prefix, "weight"), &mut self.weight);
        f(&join(prefix, "bias"), &mut self.bias);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_geometry_matches_tensorflow() {
        let g = ConvGeom::same(64, 8, 9, 9, 4, 2);
        assert_eq!((g.oh, g.ow), (16, 4));
        assert_eq!((g.pad_top, g.pad_left), (2, 3));
        let g = ConvGeom::same(5, 5, 3, 3, 1, 1);
        assert_eq!((g.oh, g.ow, g.pad_top, g.pad_left), (5, 5, 1, 1));
    }

    #[test]
    fn im2col_and_col2im_are_adjoint() {
        // <im2col(x), c> == <x, col2im(c)>
        let g = ConvGeom::same(7, 5, 3, 3, 2, 2);
        let x = Act::new(Array2::from_shape_fn((2 * 35, 3), |(r, c)| ((r * 7 + c * 3) % 11) as f64 - 5.0), 2, 7, 5);
        let cols = im2col(&x, &g);
        let probe = Array2::from_shape_fn(cols.raw_dim(), |(r, c)| ((r * 5 + c) % 13) as f64 - 6.0);
        let lhs: f64 = (&cols * &probe).sum();
        let back = col2im(&probe, 2, 3, &g);
        let rhs: f64 = (&x.data * &back.data).sum();
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn identity_kernel_passes_input_through() {
        let mut conv = Conv2d::<f64>::new(2, 2, (3, 3), (1, 1), 0, "c");
        conv.weight.value.fill(0.0);
        // centre tap (1,1) → column block 4
        conv.weight.value[[4 * 2, 0]] = 1.0;
        conv.weight.value[[4 * 2 + 1, 1]] = 1.0;
        let x = Act::new(Array2::from_shape_fn((12, 2), |(r, c)| (r * 2 + c) as f64), 1, 4, 3);
        let y = conv.forward(&x, Mode::Eval);
        assert_eq!(y.data, x.data);
    }

    #[test]
    fn transposed_conv_upsamples_by_stride() {
        let mut up = ConvTranspose2d::<f32>::new(4, 3, (5, 5), (4, 2), 1, "up");
        let x = Act::zeros(2, 4, 2, 4);
        let y = up.forward(&x, Mode::Eval);
        assert_eq!(y.shape(), [2, 16, 4, 3]);
    }
}
