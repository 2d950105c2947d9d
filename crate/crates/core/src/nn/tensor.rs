use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use ndarray::{Array2, LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type for network math. Training runs in `f32`;
/// gradient checks instantiate the same code in `f64`.
pub trait Real:
    Float
    + LinalgScalar
    + ScalarOperand
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + AddAssign
    + Send
    + Sync
    + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("finite value")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A batch of feature maps in NHWC order, stored as an `(n·h·w) × c` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Act<T> {
    pub data: Array2<T>,
    pub n: usize,
    pub h: usize,
    pub w: usize,
}

impl<T: Real> Act<T> {
    pub fn new(data: Array2<T>, n: usize, h: usize, w: usize) -> Self {
        assert_eq!(data.nrows(), n * h * w, "activation rows must equal n·h·w");
        Self { data, n, h, w }
    }

    pub fn zeros(n: usize, h: usize, w: usize, c: usize) -> Self {
        Self::new(Array2::zeros((n * h * w, c)), n, h, w)
    }

    /// Flat feature vectors, one row per batch item.
    pub fn from_rows(rows: Array2<T>) -> Self {
        let n = rows.nrows();
        Self::new(rows, n, 1, 1)
    }

    pub fn c(&self) -> usize {
        self.data.ncols()
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.n, self.h, self.w, self.c()]
    }

    /// Same values viewed as one row per batch item.
    pub fn flatten(&self) -> Array2<T> {
        let len = self.h * self.w * self.c();
        self.data.as_standard_layout().into_owned().into_shape_with_order((self.n, len)).expect("contiguous activation")
    }

    pub fn unflatten(rows: Array2<T>, h: usize, w: usize, c: usize) -> Self {
        let n = rows.nrows();
        assert_eq!(rows.ncols(), h * w * c);
        let data =
            rows.as_standard_layout().into_owned().into_shape_with_order((n * h * w, c)).expect("contiguous rows");
        Self::new(data, n, h, w)
    }
}
