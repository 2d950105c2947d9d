use csifb::backbone::BackboneSpec;
use csifb::chanmodel::{generate_sample, Dataset, Split};
use csifb::digital::{
    build_digital_model, decode_symbols, digital_decode, digital_encode, digital_encode_batch, digital_reconstruct,
    digital_transmit, latent_symbols, train_digital, Bitstream, Decoder, DigitalCheckpoint, DigitalCodec,
    DigitalModelSpec, Encoder, FreqTable,
};
use csifb::linkphys::nmse_linear;
use csifb::nn::snapshot;
use csifb::training::Hyper;
use csifb::{CMatrix, GeometryConfig};
use proptest::prelude::*;

fn spec(lambda: f64) -> DigitalModelSpec {
    DigitalModelSpec::new(BackboneSpec::default_for(64, 8, 8).with_widths(&[4, 8]), 4, lambda)
}

fn codec(seed: u64) -> DigitalCodec {
    DigitalCodec::new(build_digital_model(&spec(3e-3), seed).unwrap()).unwrap()
}

fn channels(n: usize, seed: u64) -> Vec<CMatrix> {
    (0..n).map(|i| generate_sample(&GeometryConfig::default(), 64, 8, seed + i as u64).unwrap().h_d).collect()
}

#[test]
fn encoding_is_deterministic_and_lossless_on_symbols() {
    let mut c = codec(1);
    let hs = channels(5, 10);
    for h in &hs {
        let a = digital_encode(h, &mut c).unwrap();
        let b = digital_encode(h, &mut c).unwrap();
        assert_eq!(a, b);
        let sent = latent_symbols(&mut c, &[h]).remove(0);
        assert_eq!(c.coder.decode(&a.payload, a.n_bits).unwrap(), sent);
        let rec = digital_decode(&a, &mut c).unwrap();
        assert_eq!(rec, decode_symbols(&mut c, &[sent]).remove(0));
        assert!(nmse_linear(h, &rec).unwrap().is_finite());
        let wire = Bitstream::from_bytes(&a.to_bytes()).unwrap();
        assert_eq!((wire.payload, wire.n_bits), (a.payload.clone(), a.n_bits));
    }
}

#[test]
fn coder_overhead_is_within_two_percent_plus_64_bits() {
    let g = GeometryConfig::default();
    let train = Dataset::generate(&g, 64, 8, 40, Split::Train, 3).unwrap();
    let val = Dataset::generate(&g, 64, 8, 10, Split::Test, 3).unwrap();
    let hyper = Hyper { epochs: 2, batch: 10, seed: 2, ..Hyper::default() };
    let mut ck = train_digital(&train, &val, &spec(3e-4), &hyper).unwrap();
    let hs = channels(100, 500);
    let refs: Vec<&CMatrix> = hs.iter().collect();
    let streams = digital_encode_batch(&mut ck.codec, &refs).unwrap();
    let n = streams.len() as f64;
    let actual = streams.iter().map(|s| s.n_bits as f64).sum::<f64>() / n;
    let estimate = streams.iter().map(|s| s.est_bits).sum::<f64>() / n;
    assert!(actual <= estimate * 1.02 + 64.0, "{actual} vs {estimate}");
    assert!(actual >= estimate * 0.98 - 64.0, "{actual} vs {estimate}");
}

#[test]
fn transmit_threshold_and_fallback() {
    let bs = |n_bits| Bitstream { payload: vec![0; n_bits / 8 + 1], n_bits, est_bits: n_bits as f64 };
    assert!(!digital_transmit(&bs(100), 99.9));
    assert!(digital_transmit(&bs(100), 100.0));
    assert!(digital_transmit(&bs(0), 0.0));

    let mut c = codec(2);
    let h = &channels(1, 30)[0];
    let fallback = CMatrix::from_elem((64, 8), num_complex::Complex64::new(0.1, -0.2));
    let stream = digital_encode(h, &mut c).unwrap();
    let failed = digital_reconstruct(&stream, &mut c, false, &fallback).unwrap();
    assert!(failed.failed);
    assert_eq!(failed.h_d_hat, fallback);
    let ok = digital_reconstruct(&stream, &mut c, true, &fallback).unwrap();
    assert!(!ok.failed);
    assert_eq!(ok.h_d_hat, digital_decode(&stream, &mut c).unwrap());
}

#[test]
fn zero_epochs_round_trip_through_disk() {
    let g = GeometryConfig::default();
    let train = Dataset::generate(&g, 64, 8, 6, Split::Train, 4).unwrap();
    let val = Dataset::generate(&g, 64, 8, 3, Split::Test, 4).unwrap();
    let hyper = Hyper { epochs: 0, batch: 3, seed: 9, ..Hyper::default() };
    let mut ck = train_digital(&train, &val, &spec(1e-3), &hyper).unwrap();
    let mut init = build_digital_model::<f32>(&spec(1e-3), ck.meta.init_seed).unwrap();
    assert_eq!(snapshot(&mut ck.codec.model), snapshot(&mut init));
    let dir = tempfile::tempdir().unwrap();
    ck.save(dir.path()).unwrap();
    let mut back = DigitalCheckpoint::load(dir.path()).unwrap();
    assert_eq!(back.lambda(), 1e-3);
    let h = &val.samples[0].h_d;
    let a = digital_encode(h, &mut ck.codec).unwrap();
    let b = digital_encode(h, &mut back.codec).unwrap();
    assert_eq!(a, b);
    assert_eq!(digital_decode(&b, &mut back.codec).unwrap().dim(), (64, 8));
}

fn table_and_symbols() -> impl Strategy<Value = (Vec<f64>, Vec<usize>)> {
    proptest::collection::vec(0.0f64..1.0, 2..40).prop_flat_map(|w| {
        let k = w.len();
        (Just(w), proptest::collection::vec(0..k, 0..300))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arithmetic_coder_round_trips((weights, symbols) in table_and_symbols()) {
        let total: f64 = weights.iter().sum::<f64>() + 1e-9 * weights.len() as f64;
        let p: Vec<f64> = weights.iter().map(|w| (w + 1e-9) / total).collect();
        let table = FreqTable::from_probabilities(&p).unwrap();
        let mut enc = Encoder::new();
        for &s in &symbols {
            enc.encode(&table, s);
        }
        let (bytes, n_bits) = enc.finish();
        let mut dec = Decoder::new(&bytes, n_bits);
        for &s in &symbols {
            prop_assert_eq!(dec.decode(&table).unwrap(), s);
        }
        let ideal: f64 = symbols.iter().map(|&s| table.bits(s)).sum();
        prop_assert!((n_bits as f64) <= ideal + 64.0, "{} bits for an ideal {}", n_bits, ideal);
    }
}
