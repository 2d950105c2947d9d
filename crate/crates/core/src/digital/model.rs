use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::coder::{Bitstream, Decoder, Encoder, FreqTable};
use super::entropy::{bits, symbol_probabilities};
use crate::backbone::{act_to_channels, channels_to_act, BackboneSpec};
use crate::chanmodel::CMatrix;
use crate::error::{Error, Result};
use crate::linkphys::{ReconstructionResult, Scheme};
use crate::nn::{Act, Layer, Mode, Model, Param, ParamVisitor, Real, Sequential};

/// Default symbol range `±64` quantizer steps.
pub const DEFAULT_ALPHABET_BOUND: i32 = 64;

fn default_alphabet_bound() -> i32 {
    DEFAULT_ALPHABET_BOUND
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DigitalModelSpec {
    pub backbone: BackboneSpec,
    /// Latent channels per position of the encoder's final feature map.
    pub latent_channels: usize,
    pub quantizer_step: f64,
    /// Rate-distortion weight on the bit count.
    pub lambda: f64,
    /// Quantized latents are clamped to `±alphabet_bound`.
    #[serde(default = "default_alphabet_bound")]
    pub alphabet_bound: i32,
}

impl DigitalModelSpec {
    pub fn new(backbone: BackboneSpec, latent_channels: usize, lambda: f64) -> Self {
        Self { backbone, latent_channels, quantizer_step: 1.0, lambda, alphabet_bound: DEFAULT_ALPHABET_BOUND }
    }

    pub fn n_c(&self) -> usize {
        self.backbone.n_c
    }

    pub fn n_t(&self) -> usize {
        self.backbone.n_t
    }

    /// Number of scalar latents per channel matrix.
    pub fn latent_len(&self) -> usize {
        let (h, w) = *self.backbone.feature_maps().last().expect("non-empty layout");
        self.latent_channels * h * w
    }

    pub fn validate(&self) -> Result<()> {
        self.backbone.validate()?;
        if self.latent_channels == 0 {
            return Err(Error::config("latent_channels must be at least 1"));
        }
        if !(self.quantizer_step > 0.0 && self.quantizer_step.is_finite()) {
            return Err(Error::config("quantizer_step must be positive"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda must be positive"));
        }
        if !(1..=4096).contains(&self.alphabet_bound) {
            return Err(Error::config("alphabet_bound must lie in 1..=4096"));
        }
        Ok(())
    }
}

/// Encoder, decoder and the per-latent entropy-model parameters.
pub struct DigitalModel<T: Real> {
    pub spec: DigitalModelSpec,
    pub encoder: Sequential<T>,
    pub decoder: Sequential<T>,
    /// Laplace location per latent, in quantizer steps (`1 × latent_len`).
    pub loc: Param<T>,
    /// `ln(b − MIN_SCALE)` per latent (`1 × latent_len`).
    pub log_scale: Param<T>,
}

impl<T: Real> Model<T> for DigitalModel<T> {
    fn visit_params(&mut self, f: &mut ParamVisitor<'_, T>) {
        self.encoder.visit("encoder", f);
        self.decoder.visit("decoder", f);
        f("entropy.loc", &mut self.loc);
        f("entropy.log_scale", &mut self.log_scale);
    }
}

pub fn build_digital_model<T: Real>(spec: &DigitalModelSpec, init_seed: u64) -> Result<DigitalModel<T>> {
    spec.validate()?;
    let len = spec.latent_len();
    Ok(DigitalModel {
        spec: spec.clone(),
        encoder: spec.backbone.build_encoder(len, init_seed),
        decoder: spec.backbone.build_decoder(len, init_seed),
        loc: Param::new(Array2::zeros((1, len))),
        log_scale: Param::new(Array2::zeros((1, len))),
    })
}

impl<T: Real> DigitalModel<T> {
    /// Latents in quantizer steps, one row per channel.
    pub fn latents(&mut self, h: &[&CMatrix], mode: Mode) -> Act<T> {
        let step = T::of(self.spec.quantizer_step);
        let mut y = self.encoder.forward(&channels_to_act(h), mode);
        y.data.mapv_inplace(|v| v / step);
        y
    }

    /// Reconstructions from (possibly relaxed) latents in quantizer steps.
    pub fn reconstruct(&mut self, z: &Act<T>, mode: Mode) -> Act<T> {
        let step = T::of(self.spec.quantizer_step);
        self.decoder.forward(&Act::new(z.data.mapv(|v| v * step), z.n, z.h, z.w), mode)
    }

    fn entropy_params(&self, j: usize) -> (f64, f64) {
        (self.loc.value[[0, j]].f64(), self.log_scale.value[[0, j]].f64())
    }
}

/// Static frequency tables, one per latent, derived from a trained entropy model.
#[derive(Debug, Clone)]
pub struct LatentCoder {
    pub bound: i32,
    tables: Vec<FreqTable>,
}

impl LatentCoder {
    pub fn new<T: Real>(model: &DigitalModel<T>) -> Result<Self> {
        let bound = model.spec.alphabet_bound;
        let tables = (0..model.spec.latent_len())
            .map(|j| {
                let (loc, s) = model.entropy_params(j);
                FreqTable::from_probabilities(&symbol_probabilities(loc, s, bound))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { bound, tables })
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn encode(&self, symbols: &[i32]) -> Result<(Vec<u8>, usize)> {
        if symbols.len() != self.tables.len() {
            return Err(Error::shape(format!("{} symbols for {} latents", symbols.len(), self.tables.len())));
        }
        let mut enc = Encoder::new();
        for (&q, table) in symbols.iter().zip(&self.tables) {
            if q.abs() > self.bound {
                return Err(Error::shape(format!("symbol {q} outside ±{}", self.bound)));
            }
            enc.encode(table, (q + self.bound) as usize);
        }
        Ok(enc.finish())
    }

    pub fn decode(&self, payload: &[u8], n_bits: usize) -> Result<Vec<i32>> {
        if payload.len() != n_bits.div_ceil(8) {
            return Err(Error::Corrupt(format!("{} payload bytes for {n_bits} bits", payload.len())));
        }
        let mut dec = Decoder::new(payload, n_bits);
        let symbols =
            self.tables.iter().map(|t| dec.decode(t).map(|s| s as i32 - self.bound)).collect::<Result<Vec<_>>>()?;
        // the code is prefix-free, so a valid payload re-encodes to itself
        let (again, again_bits) = self.encode(&symbols)?;
        if again_bits != n_bits || again != payload {
            return Err(Error::Corrupt("payload is not a valid code word".into()));
        }
        Ok(symbols)
    }
}

/// A trained digital codec ready for coding.
pub struct DigitalCodec {
    pub model: DigitalModel<f32>,
    pub coder: LatentCoder,
}

impl DigitalCodec {
    pub fn new(model: DigitalModel<f32>) -> Result<Self> {
        let coder = LatentCoder::new(&model)?;
        Ok(Self { model, coder })
    }
}

pub fn quantize(z: f64, bound: i32) -> i32 {
    let b = f64::from(bound);
    z.round().clamp(-b, b) as i32
}

/// Quantized latent symbols of a batch.
pub fn latent_symbols(codec: &mut DigitalCodec, h: &[&CMatrix]) -> Vec<Vec<i32>> {
    let bound = codec.coder.bound;
    let z = codec.model.latents(h, Mode::Eval);
    z.data.rows().into_iter().map(|r| r.iter().map(|v| quantize(v.f64(), bound)).collect()).collect()
}

/// Model estimate of the code length of `symbols`.
pub fn estimated_bits(model: &DigitalModel<f32>, symbols: &[i32]) -> f64 {
    symbols
        .iter()
        .enumerate()
        .map(|(j, &q)| {
            let (loc, s) = model.entropy_params(j);
            bits(f64::from(q), loc, s)
        })
        .sum()
}

pub fn digital_encode_batch(codec: &mut DigitalCodec, h: &[&CMatrix]) -> Result<Vec<Bitstream>> {
    if h.is_empty() {
        return Ok(Vec::new());
    }
    let spec = &codec.model.spec;
    for m in h {
        if m.dim() != (spec.n_c(), spec.n_t()) {
            return Err(Error::shape(format!("channel {:?} for a {}×{} model", m.dim(), spec.n_c(), spec.n_t())));
        }
    }
    latent_symbols(codec, h)
        .into_iter()
        .map(|q| {
            let (payload, n_bits) = codec.coder.encode(&q)?;
            Ok(Bitstream { payload, n_bits, est_bits: estimated_bits(&codec.model, &q) })
        })
        .collect()
}

/// Latent → uniform scalar quantization → arithmetic coding under the learned model.
pub fn digital_encode(h_d: &CMatrix, codec: &mut DigitalCodec) -> Result<Bitstream> {
    Ok(digital_encode_batch(codec, &[h_d])?.remove(0))
}

/// Reconstructions from decoded symbol rows.
pub fn decode_symbols(codec: &mut DigitalCodec, symbols: &[Vec<i32>]) -> Vec<CMatrix> {
    if symbols.is_empty() {
        return Vec::new();
    }
    let len = codec.coder.len();
    let mut z = Array2::<f32>::zeros((symbols.len(), len));
    for (i, row) in symbols.iter().enumerate() {
        for (j, &q) in row.iter().enumerate() {
            z[[i, j]] = q as f32;
        }
    }
    act_to_channels(&codec.model.reconstruct(&Act::from_rows(z), Mode::Eval))
}

pub fn digital_decode(bs: &Bitstream, codec: &mut DigitalCodec) -> Result<CMatrix> {
    let symbols = codec.coder.decode(&bs.payload, bs.n_bits)?;
    Ok(decode_symbols(codec, &[symbols]).remove(0))
}

/// Capacity-threshold feedback channel: delivered error-free iff the stream fits.
pub fn digital_transmit(bs: &Bitstream, c_fb: f64) -> bool {
    debug_assert!(c_fb >= 0.0);
    bs.n_bits as f64 <= c_fb
}

/// Decodes on success; on failure the BS beamforms with `fallback`.
pub fn digital_reconstruct(
    bs: &Bitstream,
    codec: &mut DigitalCodec,
    success: bool,
    fallback: &CMatrix,
) -> Result<ReconstructionResult> {
    let (h_d_hat, failed) = if success { (digital_decode(bs, codec)?, false) } else { (fallback.clone(), true) };
    Ok(ReconstructionResult { h_d_hat, scheme: Scheme::Digital, failed })
}
