//! Convolutional encoder/decoder backbone shared by the analog and digital codecs,
//! plus conversions between channel matrices and network tensors.
//!
//! Encoder: strided `Conv|c|k×k|↓s|BN|PReLU` layers, then a full-extent
//! projection to the bottleneck. Decoder: projection back to the smallest
//! feature map, mirrored transposed convolutions, and shape-preserving
//! residual blocks (`Conv|BN|PReLU|Conv|BN`, `+`, `PReLU`) at the
//! intermediate resolution; the last transposed convolution emits the two
//! real/imaginary planes with a linear output.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chanmodel::CMatrix;
use crate::error::{Error, Result};
use crate::nn::{Act, BatchNorm, Conv2d, ConvTranspose2d, Dense, Layer, PRelu, Real, Residual, Sequential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayerSpec {
    pub kernel: usize,
    pub channels: usize,
    /// Downsampling factor over (delay, antenna).
    pub downsample: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Prelu,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackboneSpec {
    pub n_c: usize,
    pub n_t: usize,
    pub encoder_layers: Vec<ConvLayerSpec>,
    pub decoder_residual_blocks: usize,
    pub residual_kernel: usize,
    pub batch_norm: bool,
    pub activation: Activation,
}

/// Largest of 4, 2, 1 that divides `dim` while leaving at least `floor` rows.
fn pick_factor(dim: usize, floor: usize) -> usize {
    [4, 2].into_iter().find(|&f| dim.is_multiple_of(f) && dim / f >= floor).unwrap_or(1)
}

/// Largest power-of-two factor `f` with `f^layers` not exceeding `dim / floor`.
fn spread_factor(dim: usize, floor: usize, layers: u32) -> usize {
    let budget = (dim / floor.max(1)).max(1);
    let mut f = 1;
    while dim.is_multiple_of(f * 2) && (f * 2).pow(layers) <= budget {
        f *= 2;
    }
    f
}

impl BackboneSpec {
    /// Two strided layers (9×9 then 5×5) of `width` channels. Delay taps shrink by 4
    /// per layer where possible, antennas evenly across layers down to 2 columns.
    pub fn default_for(n_c: usize, n_t: usize, width: usize) -> Self {
        let mut layers = Vec::new();
        let (mut h, mut w) = (n_c, n_t);
        for (k, kernel) in [9, 5].into_iter().enumerate() {
            let fh = pick_factor(h, 2);
            let fw = spread_factor(w, 2, 2 - k as u32);
            layers.push(ConvLayerSpec { kernel, channels: width, downsample: (fh, fw) });
            h /= fh;
            w /= fw;
        }
        Self {
            n_c,
            n_t,
            encoder_layers: layers,
            decoder_residual_blocks: 2,
            residual_kernel: 3,
            batch_norm: true,
            activation: Activation::Prelu,
        }
    }

    /// Per-layer encoder widths; a short list repeats its last entry. Decoder
    /// widths mirror the encoder.
    pub fn with_widths(mut self, widths: &[usize]) -> Self {
        if let Some(&last) = widths.last() {
            for (i, l) in self.encoder_layers.iter_mut().enumerate() {
                l.channels = *widths.get(i).unwrap_or(&last);
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.encoder_layers.is_empty() {
            return Err(Error::config("encoder_layers must not be empty"));
        }
        let (mut h, mut w) = (self.n_c, self.n_t);
        for (i, l) in self.encoder_layers.iter().enumerate() {
            let (fh, fw) = l.downsample;
            if l.kernel == 0 || l.channels == 0 || fh == 0 || fw == 0 {
                return Err(Error::config(format!("encoder_layers[{i}] has a zero field")));
            }
            if h % fh != 0 || w % fw != 0 {
                return Err(Error::config(format!(
                    "encoder_layers[{i}] downsample {:?} does not divide feature map {h}×{w}",
                    l.downsample
                )));
            }
            h /= fh;
            w /= fw;
        }
        if self.residual_kernel == 0 {
            return Err(Error::config("residual_kernel must be positive"));
        }
        Ok(())
    }

    /// Spatial sizes after each encoder layer, starting with the input.
    pub fn feature_maps(&self) -> Vec<(usize, usize)> {
        let mut maps = vec![(self.n_c, self.n_t)];
        for l in &self.encoder_layers {
            let (h, w) = *maps.last().unwrap();
            maps.push((h / l.downsample.0, w / l.downsample.1));
        }
        maps
    }

    fn bottom(&self) -> (usize, usize, usize) {
        let (h, w) = *self.feature_maps().last().unwrap();
        (h, w, self.encoder_layers.last().unwrap().channels)
    }

    fn norm_act<T: Real>(&self, seq: &mut Sequential<T>, name: &str, c: usize) {
        if self.batch_norm {
            seq.push(format!("{name}_bn"), BatchNorm::new(c));
        }
        seq.push(format!("{name}_act"), PRelu::new(c));
    }

    /// Input `(n, n_c, n_t, 2)` to `(n, 1, 1, out_features)`.
    pub fn build_encoder<T: Real>(&self, out_features: usize, seed: u64) -> Sequential<T> {
        let mut seq = Sequential::new();
        let mut c_in = 2;
        for (i, l) in self.encoder_layers.iter().enumerate() {
            let name = format!("conv{}", i + 1);
            let conv = Conv2d::new(c_in, l.channels, (l.kernel, l.kernel), l.downsample, seed, &format!("enc.{name}"));
            if i == 0 {
                seq.push(name.clone(), conv.without_input_grad());
            } else {
                seq.push(name.clone(), conv);
            }
            self.norm_act(&mut seq, &name, l.channels);
            c_in = l.channels;
        }
        let (h, w, c) = self.bottom();
        seq.push("project", Dense::new(h * w * c, (1, 1, out_features), seed, "enc.project").linear_init());
        seq
    }

    /// `(n, 1, 1, in_features)` back to `(n, n_c, n_t, 2)`.
    pub fn build_decoder<T: Real>(&self, in_features: usize, seed: u64) -> Sequential<T> {
        let mut seq = Sequential::new();
        let (h, w, c) = self.bottom();
        seq.push("expand", Dense::new(in_features, (h, w, c), seed, "dec.expand"));
        self.norm_act(&mut seq, "expand", c);
        let layers = &self.encoder_layers;
        for i in (1..layers.len()).rev() {
            let l = &layers[i];
            let c_out = layers[i - 1].channels;
            let name = format!("up{}", i + 1);
            seq.push(
                name.clone(),
                ConvTranspose2d::new(
                    l.channels,
                    c_out,
                    (l.kernel, l.kernel),
                    l.downsample,
                    seed,
                    &format!("dec.{name}"),
                ),
            );
            self.norm_act(&mut seq, &name, c_out);
        }
        let c_mid = layers[0].channels;
        let k = self.residual_kernel;
        for r in 0..self.decoder_residual_blocks {
            let mut body = Sequential::new();
            let name = format!("res{}", r + 1);
            body.push("conv1", Conv2d::new(c_mid, c_mid, (k, k), (1, 1), seed, &format!("dec.{name}.conv1")));
            self.norm_act(&mut body, "conv1", c_mid);
            body.push("conv2", Conv2d::new(c_mid, c_mid, (k, k), (1, 1), seed, &format!("dec.{name}.conv2")));
            if self.batch_norm {
                body.push("conv2_bn", BatchNorm::new(c_mid));
            }
            let post: Box<dyn Layer<T>> = Box::new(PRelu::new(c_mid));
            seq.push(name, Residual::new(body, Some(post)));
        }
        let first = &layers[0];
        let mut out = ConvTranspose2d::new(c_mid, 2, (first.kernel, first.kernel), first.downsample, seed, "dec.out");
        // linear output layer: shrink the He-scaled init
        out.weight.value.mapv_inplace(|v| v * T::of(0.5));
        seq.push("out", out);
        seq
    }
}

/// Stacks channel matrices as `(n, n_c, n_t, 2)` real/imaginary planes.
pub fn channels_to_act<T: Real>(hs: &[&CMatrix]) -> Act<T> {
    let (n_c, n_t) = hs[0].dim();
    let mut data = Array2::zeros((hs.len() * n_c * n_t, 2));
    for (b, h) in hs.iter().enumerate() {
        for ((r, c), z) in h.indexed_iter() {
            let row = (b * n_c + r) * n_t + c;
            data[[row, 0]] = T::of(z.re);
            data[[row, 1]] = T::of(z.im);
        }
    }
    Act::new(data, hs.len(), n_c, n_t)
}

/// Inverse of [`channels_to_act`].
pub fn act_to_channels<T: Real>(x: &Act<T>) -> Vec<CMatrix> {
    (0..x.n)
        .map(|b| {
            Array2::from_shape_fn((x.h, x.w), |(r, c)| {
                let row = (b * x.h + r) * x.w + c;
                Complex64::new(x.data[[row, 0]].f64(), x.data[[row, 1]].f64())
            })
        })
        .collect()
}
