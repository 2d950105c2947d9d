use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::link::{link_backward, link_forward};
use super::model::{analog_forward_batch, build_analog_model, AnalogModel};
use super::spec::AnalogModelSpec;
use crate::backbone::channels_to_act;
use crate::chanmodel::{to_frequency, CMatrix, Dataset};
use crate::checkpoint::{self, CheckpointKind};
use crate::error::{Error, Result};
use crate::linkphys::{feedback_taps, nmse_linear, nmse_to_db, select_subcarriers, SystemConfig};
use crate::nn::{clip_grad_norm, Act, Adam, Layer, Mode, Model, Real};
use crate::rng::{derive_seed, tag};
use crate::training::{Hyper, TrainingLog};

/// Everything in `model.json` besides the weight index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogMeta {
    pub spec: AnalogModelSpec,
    pub system: SystemConfig,
    pub subcarriers: Vec<usize>,
    pub trained_snr_fb_db: f64,
    pub init_seed: u64,
    pub hyper: Hyper,
    pub training: TrainingLog,
}

pub struct AnalogCheckpoint {
    pub meta: AnalogMeta,
    pub model: AnalogModel<f32>,
}

impl AnalogCheckpoint {
    pub fn save(&mut self, dir: &Path) -> Result<()> {
        checkpoint::save(dir, CheckpointKind::Analog, &self.meta, &mut self.model)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (meta, model) =
            checkpoint::load(dir, CheckpointKind::Analog, |m: &AnalogMeta| build_analog_model(&m.spec, m.init_seed))?;
        Ok(Self { meta, model })
    }

    /// Same weights in another precision.
    pub fn model_as<T: Real>(&mut self) -> AnalogModel<T> {
        let mut out = build_analog_model::<T>(&self.meta.spec, self.meta.init_seed).expect("validated spec");
        let values = crate::nn::snapshot(&mut self.model);
        let mut k = 0;
        out.visit_params(&mut |_, p| {
            p.value = values[k].1.mapv(|v| T::of(v as f64));
            k += 1;
        });
        out
    }
}

#[derive(Debug, Clone)]
pub struct EpochReport {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_nmse_db: f64,
    pub seconds: f64,
}

/// Squared reconstruction error per sample, normalized by `n_c`, averaged over the batch.
/// Gradients are accumulated into the model parameters.
pub fn loss_and_grad<T: Real>(
    model: &mut AnalogModel<T>,
    h_d: &[&CMatrix],
    taps: &[Array2<Complex64>],
    snr_fb_db: f64,
    noise_seeds: &[u64],
) -> Result<f64> {
    let n = h_d.len();
    let input: Act<T> = channels_to_act(h_d);
    let feats = model.encoder.forward(&input, Mode::Train);
    let mut received = Array2::zeros(feats.data.raw_dim());
    let mut traces = Vec::with_capacity(n);
    for i in 0..n {
        let f: Vec<f64> = feats.data.row(i).iter().map(|v| v.f64()).collect();
        let (rx, trace) = link_forward(&f, &taps[i], snr_fb_db, noise_seeds[i])?;
        for (dst, v) in received.row_mut(i).iter_mut().zip(rx) {
            *dst = T::of(v);
        }
        traces.push(trace);
    }
    let out = model.decoder.forward(&Act::from_rows(received), Mode::Train);
    let n_c = model.spec.n_c() as f64;
    let diff = &out.data - &input.data;
    let loss = diff.iter().map(|d| d.f64() * d.f64()).sum::<f64>() / (n_c * n as f64);
    let scale = T::of(2.0 / (n_c * n as f64));
    let grad_out = Act::new(diff.mapv(|d| d * scale), out.n, out.h, out.w);
    let grad_rx = model.decoder.backward(&grad_out);
    let mut grad_feats = Array2::zeros(grad_rx.data.raw_dim());
    for (i, trace) in traces.iter().enumerate() {
        let g: Vec<f64> = grad_rx.data.row(i).iter().map(|v| v.f64()).collect();
        for (dst, v) in grad_feats.row_mut(i).iter_mut().zip(link_backward(trace, &g)?) {
            *dst = T::of(v);
        }
    }
    model.encoder.backward(&Act::from_rows(grad_feats));
    Ok(loss)
}

pub(crate) fn dataset_taps(ds: &Dataset, indices: &[usize]) -> Result<Vec<Array2<Complex64>>> {
    ds.samples.iter().map(|s| feedback_taps(&to_frequency(&s.h_u)?, indices)).collect()
}

/// Mean NMSE in dB over a dataset with seeded channel noise.
pub fn validation_nmse_db(
    model: &mut AnalogModel<f32>,
    ds: &Dataset,
    taps: &[Array2<Complex64>],
    snr_fb_db: f64,
    seed: u64,
) -> Result<f64> {
    if ds.is_empty() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    for chunk in (0..ds.len()).collect::<Vec<_>>().chunks(100) {
        let h: Vec<&CMatrix> = chunk.iter().map(|&i| &ds.samples[i].h_d).collect();
        let t: Vec<Array2<Complex64>> = chunk.iter().map(|&i| taps[i].clone()).collect();
        let seeds: Vec<u64> = chunk.iter().map(|&i| derive_seed(&[seed, tag("val"), i as u64])).collect();
        let rec = analog_forward_batch(model, &h, &t, snr_fb_db, &seeds)?;
        for (h, r) in h.iter().zip(&rec) {
            total += nmse_linear(h, r)?;
        }
    }
    Ok(nmse_to_db(total / ds.len() as f64))
}

pub fn train_analog(
    train: &Dataset,
    val: &Dataset,
    config: &SystemConfig,
    spec: &AnalogModelSpec,
    hyper: &Hyper,
) -> Result<AnalogCheckpoint> {
    train_analog_with(train, val, config, spec, hyper, &mut |_| {})
}

/// Trains one model for the fixed uplink SNR in `config`, calling `observer` after each epoch.
pub fn train_analog_with(
    train: &Dataset,
    val: &Dataset,
    config: &SystemConfig,
    spec: &AnalogModelSpec,
    hyper: &Hyper,
    observer: &mut dyn FnMut(&EpochReport),
) -> Result<AnalogCheckpoint> {
    config.validate()?;
    hyper.validate()?;
    spec.validate()?;
    if spec.n_c() != config.n_c || spec.n_t() != config.n_t || spec.n_f != config.n_f {
        return Err(Error::shape("model spec does not match the system config"));
    }
    if train.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if train.n_c() != config.n_c || train.n_t() != config.n_t {
        return Err(Error::shape("training set shape does not match the system config"));
    }
    let started = Instant::now();
    let subcarriers = select_subcarriers(config.n_c, config.n_f, config.subcarrier_seed)?;
    let train_taps = dataset_taps(train, &subcarriers)?;
    let val_taps = dataset_taps(val, &subcarriers)?;
    let init_seed = derive_seed(&[hyper.seed, tag("init")]);
    let mut model = build_analog_model::<f32>(spec, init_seed)?;
    let mut opt = Adam::new(hyper.lr);
    let total_steps = hyper.epochs * hyper.steps_per_epoch(train.len());
    let mut log = TrainingLog { seed: hyper.seed, epochs: hyper.epochs, ..TrainingLog::default() };

    for epoch in 0..hyper.epochs {
        let mut epoch_loss = 0.0;
        let batches = hyper.batches(train.len(), epoch);
        for (b, idx) in batches.iter().enumerate() {
            let h: Vec<&CMatrix> = idx.iter().map(|&i| &train.samples[i].h_d).collect();
            let t: Vec<Array2<Complex64>> = idx.iter().map(|&i| train_taps[i].clone()).collect();
            let seeds: Vec<u64> =
                idx.iter().map(|&i| derive_seed(&[hyper.seed, tag("noise"), epoch as u64, i as u64])).collect();
            let loss = loss_and_grad(&mut model, &h, &t, config.snr_fb_db, &seeds)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, batch: b, loss });
            }
            epoch_loss += loss * idx.len() as f64;
            clip_grad_norm(&mut model, hyper.grad_clip);
            opt.lr = hyper.lr_at(opt.steps() as usize, total_steps);
            opt.step(&mut model);
        }
        let train_loss = epoch_loss / train.len() as f64;
        let val_nmse_db = validation_nmse_db(&mut model, val, &val_taps, config.snr_fb_db, hyper.seed)?;
        log.train_loss.push(train_loss);
        log.val_nmse_db.push(val_nmse_db);
        observer(&EpochReport { epoch, train_loss, val_nmse_db, seconds: started.elapsed().as_secs_f64() });
    }
    model.zero_grad();
    Ok(AnalogCheckpoint {
        meta: AnalogMeta {
            spec: spec.clone(),
            system: config.clone(),
            subcarriers,
            trained_snr_fb_db: config.snr_fb_db,
            init_seed,
            hyper: hyper.clone(),
            training: log,
        },
        model,
    })
}
