use csifb::analog::{
    analog_forward, build_analog_model, features_to_symbols, spec_for_overhead, symbols_to_features, train_analog,
    AnalogCheckpoint, FeatureCodec,
};
use csifb::chanmodel::{generate_sample, to_frequency, Dataset, Split};
use csifb::linkphys::{nmse_linear, SystemConfig};
use csifb::nn::snapshot;
use csifb::training::Hyper;
use csifb::{CMatrix, GeometryConfig};
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

fn desk_spec(rho: f64) -> csifb::analog::AnalogModelSpec {
    spec_for_overhead(64, 8, rho).unwrap().with_widths(&[4, 8])
}

#[test]
fn overhead_table_examples() {
    assert_eq!(spec_for_overhead(256, 32, 0.25).unwrap().feature_count, 128);
    assert_eq!(spec_for_overhead(64, 8, 1.0).unwrap().feature_count, 128);
    assert_eq!(spec_for_overhead(64, 8, 0.25).unwrap().feature_count, 32);
    assert_eq!(spec_for_overhead(64, 8, 0.3).unwrap(), spec_for_overhead(64, 8, 0.3).unwrap());
}

#[test]
fn fresh_models_are_deterministic_and_finite() {
    let spec = desk_spec(0.25);
    let mut a = build_analog_model::<f64>(&spec, 9).unwrap();
    let mut b = build_analog_model::<f64>(&spec, 9).unwrap();
    let mut c = build_analog_model::<f64>(&spec, 10).unwrap();
    assert_eq!(snapshot(&mut a), snapshot(&mut b));
    assert_ne!(snapshot(&mut a), snapshot(&mut c));

    let zero = CMatrix::zeros((64, 8));
    let f = a.encode(&[&zero]);
    assert_eq!(f.dim(), (1, 32));
    let out = a.decode(&f);
    assert_eq!(out[0].dim(), (64, 8));
    assert!(out[0].iter().all(|z| z.re.is_finite() && z.im.is_finite()));
}

#[test]
fn untrained_forward_is_finite_and_never_fails() {
    let s = generate_sample(&GeometryConfig::default(), 64, 8, 1).unwrap();
    let config = SystemConfig::with_rho(64, 8, 0.25, 10.0, 10.0).unwrap();
    let mut model = build_analog_model::<f32>(&desk_spec(0.25), 2).unwrap();
    let r = analog_forward(&s.h_d, &to_frequency(&s.h_u).unwrap(), &config, &mut model, 3).unwrap();
    assert!(!r.failed);
    assert_eq!(r.h_d_hat.dim(), (64, 8));
    assert!(r.h_d_hat.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    let again = analog_forward(&s.h_d, &to_frequency(&s.h_u).unwrap(), &config, &mut model, 3).unwrap();
    assert_eq!(r.h_d_hat, again.h_d_hat);
}

/// Sends the first `n_f` entries of antenna 0 and puts them back on receive.
struct PassThrough {
    n_f: usize,
}

impl FeatureCodec for PassThrough {
    fn encode(&mut self, h: &[&CMatrix]) -> Array2<f64> {
        Array2::from_shape_fn((h.len(), 2 * self.n_f), |(i, k)| {
            let z = h[i][[k / 2, 0]];
            if k % 2 == 0 {
                z.re
            } else {
                z.im
            }
        })
    }

    fn decode(&mut self, features: &Array2<f64>) -> Vec<CMatrix> {
        features
            .rows()
            .into_iter()
            .map(|r| {
                let mut h = CMatrix::zeros((64, 8));
                for j in 0..self.n_f {
                    h[[j, 0]] = Complex64::new(r[2 * j], r[2 * j + 1]);
                }
                h
            })
            .collect()
    }
}

#[test]
fn noiseless_pass_through_recovers_the_sent_part() {
    let s = generate_sample(&GeometryConfig::default(), 64, 8, 4).unwrap();
    let mut h = CMatrix::zeros((64, 8));
    for j in 0..16 {
        h[[j, 0]] = Complex64::from_polar(1.0, 0.3 * j as f64);
    }
    let config = SystemConfig::with_rho(64, 8, 0.25, f64::INFINITY, 10.0).unwrap();
    let r = analog_forward(&h, &to_frequency(&s.h_u).unwrap(), &config, &mut PassThrough { n_f: 16 }, 0).unwrap();
    for (a, b) in r.h_d_hat.iter().zip(h.iter()) {
        assert!((a - b).norm() < 1e-12);
    }
    assert!(nmse_linear(&h, &r.h_d_hat).unwrap() < 1e-20);
}

#[test]
fn zero_epochs_keep_the_initialization_and_checkpoints_round_trip() {
    let g = GeometryConfig::default();
    let train = Dataset::generate(&g, 64, 8, 8, Split::Train, 1).unwrap();
    let val = Dataset::generate(&g, 64, 8, 4, Split::Test, 1).unwrap();
    let config = SystemConfig::with_rho(64, 8, 0.25, 20.0, 10.0).unwrap();
    let spec = desk_spec(0.25);
    let hyper = Hyper { epochs: 0, batch: 4, seed: 5, ..Hyper::default() };
    let mut ck = train_analog(&train, &val, &config, &spec, &hyper).unwrap();
    assert_eq!(ck.meta.trained_snr_fb_db, 20.0);
    let mut init = build_analog_model::<f32>(&spec, ck.meta.init_seed).unwrap();
    assert_eq!(snapshot(&mut ck.model), snapshot(&mut init));

    let dir = tempfile::tempdir().unwrap();
    ck.save(dir.path()).unwrap();
    let mut back = AnalogCheckpoint::load(dir.path()).unwrap();
    assert_eq!(back.meta, ck.meta);
    assert_eq!(snapshot(&mut back.model), snapshot(&mut ck.model));
}

#[test]
fn short_training_reduces_the_loss() {
    let g = GeometryConfig::default();
    let train = Dataset::generate(&g, 64, 8, 60, Split::Train, 2).unwrap();
    let val = Dataset::generate(&g, 64, 8, 20, Split::Test, 2).unwrap();
    let config = SystemConfig::with_rho(64, 8, 0.25, 10.0, 10.0).unwrap();
    let hyper = Hyper { epochs: 4, batch: 10, seed: 1, ..Hyper::default() };
    let ck = train_analog(&train, &val, &config, &desk_spec(0.25), &hyper).unwrap();
    let loss = &ck.meta.training.train_loss;
    assert_eq!(loss.len(), 4);
    assert!(loss.last().unwrap() < &loss[0], "{loss:?}");
}

proptest! {
    #[test]
    fn grouping_round_trips_up_to_a_positive_scale(f in proptest::collection::vec(-3.0f64..3.0, 2..40usize)) {
        let f: Vec<f64> = if f.len() % 2 == 1 { f[1..].to_vec() } else { f };
        prop_assume!(f.iter().any(|v| v.abs() > 1e-3));
        let back = symbols_to_features(&features_to_symbols(&f).unwrap());
        let (k, _) = f.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap();
        let scale = back[k] / f[k];
        prop_assert!(scale > 0.0);
        for (a, b) in back.iter().zip(&f) {
            prop_assert!((a - scale * b).abs() < 1e-9);
        }
    }
}
