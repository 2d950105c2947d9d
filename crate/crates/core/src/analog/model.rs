use ndarray::Array2;
use num_complex::Complex64;

use super::link::link_forward;
use super::spec::AnalogModelSpec;
use crate::backbone::{act_to_channels, channels_to_act};
use crate::chanmodel::CMatrix;
use crate::error::{Error, Result};
use crate::linkphys::{feedback_taps, select_subcarriers, ReconstructionResult, Scheme, SystemConfig};
use crate::nn::{Act, Layer, Mode, Model, ParamVisitor, Real, Sequential};

/// UE-side feature encoder and BS-side feature decoder around the feedback link.
pub trait FeatureCodec {
    /// One row of `2·n_f` real features per channel.
    fn encode(&mut self, h: &[&CMatrix]) -> Array2<f64>;
    fn decode(&mut self, features: &Array2<f64>) -> Vec<CMatrix>;
}

pub struct AnalogModel<T: Real> {
    pub spec: AnalogModelSpec,
    pub encoder: Sequential<T>,
    pub decoder: Sequential<T>,
}

impl<T: Real> Model<T> for AnalogModel<T> {
    fn visit_params(&mut self, f: &mut ParamVisitor<'_, T>) {
        self.encoder.visit("encoder", f);
        self.decoder.visit("decoder", f);
    }
}

pub fn build_analog_model<T: Real>(spec: &AnalogModelSpec, init_seed: u64) -> Result<AnalogModel<T>> {
    spec.validate()?;
    Ok(AnalogModel {
        spec: spec.clone(),
        encoder: spec.backbone.build_encoder(spec.feature_count, init_seed),
        decoder: spec.backbone.build_decoder(spec.feature_count, init_seed),
    })
}

impl<T: Real> AnalogModel<T> {
    pub fn encode_mode(&mut self, h: &[&CMatrix], mode: Mode) -> Act<T> {
        self.encoder.forward(&channels_to_act(h), mode)
    }

    pub fn decode_mode(&mut self, features: &Act<T>, mode: Mode) -> Act<T> {
        self.decoder.forward(features, mode)
    }
}

impl<T: Real> FeatureCodec for AnalogModel<T> {
    fn encode(&mut self, h: &[&CMatrix]) -> Array2<f64> {
        self.encode_mode(h, Mode::Eval).data.mapv(|v| v.f64())
    }

    fn decode(&mut self, features: &Array2<f64>) -> Vec<CMatrix> {
        let act = Act::from_rows(features.mapv(T::of));
        act_to_channels(&self.decode_mode(&act, Mode::Eval))
    }
}

/// Feedback channel taps (`n_t × n_f`) of one uplink channel on the configured subcarriers.
pub fn uplink_taps(h_u_freq: &CMatrix, config: &SystemConfig) -> Result<Array2<Complex64>> {
    feedback_taps(h_u_freq, &select_subcarriers(config.n_c, config.n_f, config.subcarrier_seed)?)
}

/// Runs a batch through encoder, link and decoder. `taps[i]` are the feedback
/// channel columns for sample `i` and `noise_seeds[i]` its channel noise.
pub fn analog_forward_batch(
    codec: &mut impl FeatureCodec,
    h_d: &[&CMatrix],
    taps: &[Array2<Complex64>],
    snr_fb_db: f64,
    noise_seeds: &[u64],
) -> Result<Vec<CMatrix>> {
    if h_d.len() != taps.len() || h_d.len() != noise_seeds.len() {
        return Err(Error::shape("batch inputs differ in length"));
    }
    if h_d.is_empty() {
        return Ok(Vec::new());
    }
    let features = codec.encode(h_d);
    let mut received = Array2::zeros(features.raw_dim());
    for (i, row) in features.rows().into_iter().enumerate() {
        let f = row.to_vec();
        if taps[i].ncols() * 2 != f.len() {
            return Err(Error::shape(format!("{} features for {} feedback subcarriers", f.len(), taps[i].ncols())));
        }
        let (rx, _) = link_forward(&f, &taps[i], snr_fb_db, noise_seeds[i])?;
        received.row_mut(i).assign(&ndarray::Array1::from(rx));
    }
    Ok(codec.decode(&received))
}

/// One feedback event end to end. Analog feedback never reports a failure.
pub fn analog_forward(
    h_d: &CMatrix,
    h_u_freq: &CMatrix,
    config: &SystemConfig,
    codec: &mut impl FeatureCodec,
    noise_seed: u64,
) -> Result<ReconstructionResult> {
    let taps = uplink_taps(h_u_freq, config)?;
    let mut out = analog_forward_batch(codec, &[h_d], &[taps], config.snr_fb_db, &[noise_seed])?;
    Ok(ReconstructionResult { h_d_hat: out.remove(0), scheme: Scheme::Analog, failed: false })
}
