use super::param::{join, ParamVisitor};
use super::tensor::{Act, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, caches kept for `backward`.
    Train,
    /// Running statistics.
    Eval,
}

/// A differentiable network stage. `forward` caches what `backward` needs;
/// `backward` accumulates parameter gradients and returns the input gradient.
pub trait Layer<T: Real>: Send {
    fn forward(&mut self, x: &Act<T>, mode: Mode) -> Act<T>;
    fn backward(&mut self, grad: &Act<T>) -> Act<T>;
    fn visit(&mut self, prefix: &str, f: &mut ParamVisitor<'_, T>);
}

/// Layers applied in order.
#[derive(Default)]
pub struct Sequential<T: Real> {
    layers: Vec<(String, Box<dyn Layer<T>>)>,
}

impl<T: Real> Sequential<T> {
    pub fn new() -> Self {
        Self { layers: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, layer: impl Layer<T> + 'static) {
        self.layers.push((name.into(), Box::new(layer)));
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}

impl<T: Real> Layer<T> for Sequential<T> {
    fn forward(&mut self, x: &Act<T>, mode: Mode) -> Act<T> {
        let mut iter = self.layers.iter_mut();
        let Some((_, first)) = iter.next() else {
            return x.clone();
        };
        let mut out = first.forward(x, mode);
        for (_, layer) in iter {
            out = layer.forward(&out, mode);
        }
        out
    }

    fn backward(&mut self, grad: &Act<T>) -> Act<T> {
        let mut iter = self.layers.iter_mut().rev();
        let Some((_, last)) = iter.next() else {
            return grad.clone();
        };
        let mut g = last.backward(grad);
        for (_, layer) in iter {
            g = layer.backward(&g);
        }
        g
    }

    fn visit(&mut self, prefix: &str, f: &mut ParamVisitor<'_, T>) {
        for (name, layer) in &mut self.layers {
            layer.visit(&join(prefix, name), f);
        }
    }
}

/// `post(body(x) + x)`: the shape-preserving residual block.
pub struct Residual<T: Real> {
    body: Sequential<T>,
    post: Option<Box<dyn Layer<T>>>,
}

impl<T: Real> Residual<T> {
    pub fn new(body: Sequential<T>, post: Option<Box<dyn Layer<T>>>) -> Self {
        Self { body, post }
    }
}

impl<T: Real> Layer<T> for Residual<T> {
    fn forward(&mut self, x: &Act<T>, mode: Mode) -> Act<T> {
        let mut y = self.body.forward(x, mode);
        assert_eq!(y.shape(), x.shape(), "residual body must preserve shape");
        y.data += &x.data;
        match &mut self.post {
            Some(p) => p.forward(&y, mode),
            None => y,
        }
    }

    fn backward(&mut self, grad: &Act<T>) -> Act<T> {
        let g = match &mut self.post {
            Some(p) => p.backward(grad),
            None => grad.clone(),
        };
        let mut gx = self.body.backward(&g);
        gx.data += &g.data;
        gx
    }

    fn visit(&mut self, prefix: &str, f: &mut ParamVisitor<'_, T>) {
        self.body.visit(&join(prefix, "body"), f);
        if let Some(p) = &mut self.post {
            p.visit(&join(prefix, "post"), f);
        }
    }
}
