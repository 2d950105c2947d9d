use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::entropy::bits_and_grad;
use super::model::{
    build_digital_model, decode_symbols, estimated_bits, latent_symbols, DigitalCodec, DigitalModel, DigitalModelSpec,
};
use crate::backbone::channels_to_act;
use crate::chanmodel::{CMatrix, Dataset};
use crate::checkpoint::{self, CheckpointKind};
use crate::error::{Error, Result};
use crate::linkphys::{nmse_linear, nmse_to_db};
use crate::nn::{clip_grad_norm, Act, Adam, Layer, Mode, Model, Real};
use crate::rng::{derive_seed, rng_from, tag};
use crate::training::{Hyper, TrainingLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitalMeta {
    pub spec: DigitalModelSpec,
    pub init_seed: u64,
    pub hyper: Hyper,
    pub training: TrainingLog,
}

pub struct DigitalCheckpoint {
    pub meta: DigitalMeta,
    pub codec: DigitalCodec,
}

impl DigitalCheckpoint {
    pub fn save(&mut self, dir: &Path) -> Result<()> {
        checkpoint::save(dir, CheckpointKind::Digital, &self.meta, &mut self.codec.model)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (meta, model) = checkpoint::load(dir, CheckpointKind::Digital, |m: &DigitalMeta| {
            build_digital_model(&m.spec, m.init_seed)
        })?;
        Ok(Self { meta, codec: DigitalCodec::new(model)? })
    }

    pub fn lambda(&self) -> f64 {
        self.meta.spec.lambda
    }
}

#[derive(Debug, Clone)]
pub struct DigitalEpochReport {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_bits: f64,
    pub val_nmse_db: f64,
    pub val_bits: f64,
    pub seconds: f64,
}

/// Relaxed rate-distortion loss `D + λ·R` averaged over the batch, where `D` is
/// the squared error normalized by `n_c` and `R` the estimated bits of the
/// latent plus uniform noise `dither` (in quantizer steps). Returns `(loss, mean bits)`
/// and accumulates parameter gradients.
pub fn rd_loss_and_grad<T: Real>(
    model: &mut DigitalModel<T>,
    h_d: &[&CMatrix],
    dither: &Array2<f64>,
) -> Result<(f64, f64)> {
    let n = h_d.len();
    let len = model.spec.latent_len();
    if dither.dim() != (n, len) {
        return Err(Error::shape(format!("dither {:?} for {n} samples of {len} latents", dither.dim())));
    }
    let bound = f64::from(model.spec.alphabet_bound);
    let lambda = model.spec.lambda;
    let input: Act<T> = channels_to_act(h_d);
    let z = model.latents(h_d, Mode::Train);
    let mut z_tilde = z.clone();
    let mut bit_total = 0.0;
    let mut g_rate = Array2::<f64>::zeros((n, len));
    let mut g_loc = vec![0.0; len];
    let mut g_scale = vec![0.0; len];
    for i in 0..n {
        for j in 0..len {
            let zc = z.data[[i, j]].f64().clamp(-bound, bound);
            let x = zc + dither[[i, j]];
            z_tilde.data[[i, j]] = T::of(x);
            let (loc, s) = (model.loc.value[[0, j]].f64(), model.log_scale.value[[0, j]].f64());
            let g = bits_and_grad(x, loc, s);
            bit_total += g.bits;
            g_rate[[i, j]] = g.d_x;
            g_loc[j] += g.d_loc;
            g_scale[j] += g.d_log_scale;
        }
    }
    let out = model.reconstruct(&z_tilde, Mode::Train);
    let n_c = model.spec.n_c() as f64;
    let diff = &out.data - &input.data;
    let distortion = diff.iter().map(|d| d.f64() * d.f64()).sum::<f64>() / (n_c * n as f64);
    let mean_bits = bit_total / n as f64;
    let scale = T::of(2.0 / (n_c * n as f64));
    let grad_out = Act::new(diff.mapv(|d| d * scale), out.n, out.h, out.w);
    let step = model.spec.quantizer_step;
    let g_in = model.decoder.backward(&grad_out);
    let rate_w = lambda / n as f64;
    let mut g_z = Array2::<T>::zeros((n, len));
    for i in 0..n {
        for j in 0..len {
            let raw = z.data[[i, j]].f64();
            if raw.abs() <= bound {
                // through ŷ = z̃·step into the decoder, plus the rate term; then z = y/step
                let g = g_in.data[[i, j]].f64() * step + rate_w * g_rate[[i, j]];
                g_z[[i, j]] = T::of(g / step);
            }
        }
    }
    model.encoder.backward(&Act::from_rows(g_z));
    for j in 0..len {
        model.loc.grad[[0, j]] += T::of(rate_w * g_loc[j]);
        model.log_scale.grad[[0, j]] += T::of(rate_w * g_scale[j]);
    }
    Ok((distortion + lambda * mean_bits, mean_bits))
}

/// Uniform noise in `[-½, ½)` for one batch, one row per sample.
pub fn dither_for(seed: u64, epoch: usize, ids: &[usize], len: usize) -> Array2<f64> {
    let mut out = Array2::zeros((ids.len(), len));
    for (r, &id) in ids.iter().enumerate() {
        let mut rng = rng_from(derive_seed(&[seed, tag("dither"), epoch as u64, id as u64]));
        for v in out.row_mut(r) {
            *v = rng.random::<f64>() - 0.5;
        }
    }
    out
}

/// Mean NMSE (dB) and mean estimated bits with hard quantization.
pub fn evaluate_digital(codec: &mut DigitalCodec, ds: &Dataset) -> Result<(f64, f64)> {
    if ds.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let (mut err, mut bits) = (0.0, 0.0);
    for chunk in ds.samples.chunks(100) {
        let h: Vec<&CMatrix> = chunk.iter().map(|s| &s.h_d).collect();
        let q = latent_symbols(codec, &h);
        bits += q.iter().map(|row| estimated_bits(&codec.model, row)).sum::<f64>();
        for (h, r) in h.iter().zip(decode_symbols(codec, &q)) {
            err += nmse_linear(h, &r)?;
        }
    }
    let n = ds.len() as f64;
    Ok((nmse_to_db(err / n), bits / n))
}

pub fn train_digital(
    train: &Dataset,
    val: &Dataset,
    spec: &DigitalModelSpec,
    hyper: &Hyper,
) -> Result<DigitalCheckpoint> {
    train_digital_with(train, val, spec, hyper, &mut |_| {})
}

/// Channel-agnostic rate-distortion training; the feedback link plays no part.
pub fn train_digital_with(
    train: &Dataset,
    val: &Dataset,
    spec: &DigitalModelSpec,
    hyper: &Hyper,
    observer: &mut dyn FnMut(&DigitalEpochReport),
) -> Result<DigitalCheckpoint> {
    hyper.validate()?;
    spec.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if train.n_c() != spec.n_c() || train.n_t() != spec.n_t() {
        return Err(Error::shape("training set shape does not match the model spec"));
    }
    let started = Instant::now();
    let init_seed = derive_seed(&[hyper.seed, tag("init")]);
    let mut model = build_digital_model::<f32>(spec, init_seed)?;
    let mut opt = Adam::new(hyper.lr);
    let total_steps = hyper.epochs * hyper.steps_per_epoch(train.len());
    let mut log = TrainingLog { seed: hyper.seed, epochs: hyper.epochs, ..TrainingLog::default() };
    let len = spec.latent_len();

    for epoch in 0..hyper.epochs {
        let (mut epoch_loss, mut epoch_bits) = (0.0, 0.0);
        for (b, idx) in hyper.batches(train.len(), epoch).iter().enumerate() {
            let h: Vec<&CMatrix> = idx.iter().map(|&i| &train.samples[i].h_d).collect();
            let dither = dither_for(hyper.seed, epoch, idx, len);
            let (loss, bits) = rd_loss_and_grad(&mut model, &h, &dither)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, batch: b, loss });
            }
            epoch_loss += loss * idx.len() as f64;
            epoch_bits += bits * idx.len() as f64;
            clip_grad_norm(&mut model, hyper.grad_clip);
            opt.lr = hyper.lr_at(opt.steps() as usize, total_steps);
            opt.step(&mut model);
        }
        let n = train.len() as f64;
        let mut codec = DigitalCodec::new(model)?;
        let (val_nmse_db, val_bits) = evaluate_digital(&mut codec, val)?;
        model = codec.model;
        log.train_loss.push(epoch_loss / n);
        log.train_bits.push(epoch_bits / n);
        log.val_nmse_db.push(val_nmse_db);
        observer(&DigitalEpochReport {
            epoch,
            train_loss: epoch_loss / n,
            train_bits: epoch_bits / n,
            val_nmse_db,
            val_bits,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    model.zero_grad();
    Ok(DigitalCheckpoint {
        meta: DigitalMeta { spec: spec.clone(), init_seed, hyper: hyper.clone(), training: log },
        codec: DigitalCodec::new(model)?,
    })
}
