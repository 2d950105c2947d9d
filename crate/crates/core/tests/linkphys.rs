use csifb::linkphys::{
    apply_feedback_channel, db_to_linear, downlink_rate, feedback_capacity, mean_power, mrc_combine, nmse,
    normalize_power, select_subcarriers, simo_channel, FeedbackFrame, NMSE_FLOOR_DB,
};
use csifb::rng::rng_from;
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

/// `log₂ 6 + log₂ 21`, computed offline.
const CAPACITY_TWO_COLUMNS: f64 = 6.977279923499917;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<Complex64> {
    let mut rng = rng_from(seed);
    Array2::from_shape_fn((rows, cols), |_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn nonzero_vec(max_len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..max_len)
        .prop_map(|v| v.into_iter().map(|(re, im)| c(re, im)).collect::<Vec<_>>())
        .prop_filter("non-zero", |v| v.iter().any(|z| z.norm() > 1e-3))
}

#[test]
fn noise_variance_matches_snr() {
    let draws = 100_000;
    for snr_db in [0.0, 10.0] {
        let sigma2 = 10f64.powf(-snr_db / 10.0);
        let frame = FeedbackFrame { x: vec![c(0.0, 0.0)], indices: vec![2] };
        let h_u = Array2::from_elem((4, 4), c(1.0, 0.0));
        let mut acc = [0.0; 4];
        for seed in 0..draws {
            let out = apply_feedback_channel(&frame, &h_u, snr_db, seed).unwrap();
            for (a, v) in acc.iter_mut().enumerate() {
                *v += out.y[[a, 0]].norm_sqr();
            }
        }
        for (a, v) in acc.iter().enumerate() {
            let var = v / draws as f64;
            assert!((var - sigma2).abs() < 0.02 * sigma2, "antenna {a} at {snr_db} dB: {var}");
        }
    }
}

#[test]
fn post_mrc_snr_is_matched_filter_gain() {
    let draws = 100_000u64;
    let h_f = Array2::from_shape_vec((3, 1), vec![c(0.6, 0.2), c(-0.3, 0.9), c(1.1, -0.4)]).unwrap();
    let gain: f64 = h_f.iter().map(|z| z.norm_sqr()).sum();
    let snr_db = 5.0;
    let x = c(0.8, -0.6);
    let mut err = 0.0;
    for seed in 0..draws {
        let xhat = mrc_combine(&simo_channel(h_f.clone(), &[x], snr_db, seed)).unwrap()[0];
        err += (xhat - x).norm_sqr();
    }
    let snr = x.norm_sqr() / (err / draws as f64);
    let expected = db_to_linear(snr_db) * gain;
    assert!((snr / expected - 1.0).abs() < 0.03, "{snr} vs {expected}");
}

#[test]
fn noiseless_channel_and_mrc_are_identity() {
    let h_u = random_matrix(16, 4, 3);
    let idx = select_subcarriers(16, 5, 1).unwrap();
    let x = normalize_power(&[c(1.0, 2.0), c(-0.5, 0.1), c(0.3, 0.3), c(2.0, 0.0), c(0.0, -1.0)]).unwrap();
    let frame = FeedbackFrame { x: x.clone(), indices: idx };
    let out = apply_feedback_channel(&frame, &h_u, f64::INFINITY, 0).unwrap();
    for (a, b) in mrc_combine(&out).unwrap().iter().zip(&x) {
        assert!((a - b).norm() < 1e-12);
    }
    let h2 = Array2::from_shape_vec((2, 1), vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
    let y = simo_channel(h2, &[c(1.0, 0.0)], f64::INFINITY, 0);
    assert_eq!(y.y.column(0).to_vec(), vec![c(1.0, 0.0), c(0.0, 1.0)]);
    assert!((mrc_combine(&y).unwrap()[0] - c(1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn capacity_against_offline_sum() {
    let h = Array2::from_shape_vec((1, 2), vec![c(0.5f64.sqrt(), 0.0), c(0.0, 2.0f64.sqrt())]).unwrap();
    assert!((feedback_capacity(&h, 10.0, 1.0) - CAPACITY_TWO_COLUMNS).abs() < 1e-9);
    assert!((feedback_capacity(&h, 10.0, 0.5) - CAPACITY_TWO_COLUMNS / 2.0).abs() < 1e-9);
    assert_eq!(feedback_capacity(&h, f64::NEG_INFINITY, 1.0), 0.0);
    let one = Array2::from_elem((1, 1), c(1.0, 0.0));
    assert!((feedback_capacity(&one, 0.0, 1.0) - 1.0).abs() < 1e-12);
}

#[test]
fn paper_overhead_point() {
    let idx = select_subcarriers(256, 51, 4).unwrap();
    assert_eq!(idx.len(), 51);
    assert!((51.0f64 / 256.0 - 0.199).abs() < 1e-3);
    assert_eq!(idx, select_subcarriers(256, 51, 4).unwrap());
}

/// Direct loop over subcarriers and antennas with explicit conjugates.
fn brute_rate(h: &Array2<Complex64>, g: &Array2<Complex64>, snr_db: f64) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    let mut sum = 0.0;
    for i in 0..h.nrows() {
        let (mut re, mut im, mut norm) = (0.0, 0.0, 0.0);
        for t in 0..h.ncols() {
            let (a, b) = (h[[i, t]], g[[i, t]]);
            re += a.re * b.re + a.im * b.im;
            im += a.im * b.re - a.re * b.im;
            norm += b.re * b.re + b.im * b.im;
        }
        if norm > 0.0 {
            sum += (1.0 + snr * (re * re + im * im) / norm).log2();
        }
    }
    sum / h.nrows() as f64
}

#[test]
fn downlink_rate_matches_brute_force() {
    for seed in 0..10 {
        let h = random_matrix(32, 4, seed);
        let g = random_matrix(32, 4, seed + 100);
        let fast = downlink_rate(&h, &g, 10.0).unwrap();
        assert!((fast - brute_rate(&h, &g, 10.0)).abs() < 1e-9);
        let perfect = downlink_rate(&h, &h, 10.0).unwrap();
        assert!(perfect >= fast);
    }
    let h = Array2::from_shape_fn((8, 2), |(i, _)| c((1.5f64).sqrt() * if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
    assert!((downlink_rate(&h, &h, 0.0).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn nmse_matches_brute_force() {
    let h = random_matrix(16, 4, 1);
    let g = random_matrix(16, 4, 2);
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in h.iter().zip(g.iter()) {
        num += (a.re - b.re).powi(2) + (a.im - b.im).powi(2);
        den += a.re * a.re + a.im * a.im;
    }
    assert!((nmse(&h, &g).unwrap() - 10.0 * (num / den).log10()).abs() < 1e-9);
    assert!(nmse(&h, &h).unwrap() <= NMSE_FLOOR_DB);
    assert!(nmse(&h, &Array2::zeros((16, 4))).unwrap().abs() < 1e-12);
    assert!(nmse(&Array2::zeros((16, 4)), &h).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalized_power_is_one_and_scale_free(x in nonzero_vec(40), scale in 0.01f64..100.0) {
        let a = normalize_power(&x).unwrap();
        prop_assert!((mean_power(&a) - 1.0).abs() < 1e-9);
        let scaled: Vec<_> = x.iter().map(|z| z * scale).collect();
        let b = normalize_power(&scaled).unwrap();
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).norm() < 1e-9);
        }
    }

    #[test]
    fn rate_is_invariant_to_reconstruction_scale(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        prop_assume!(re.abs() + im.abs() > 1e-2);
        let h = random_matrix(8, 3, seed);
        let g = random_matrix(8, 3, seed ^ 1);
        let scaled = g.mapv(|z| z * c(re, im));
        let a = downlink_rate(&h, &g, 10.0).unwrap();
        prop_assert!((a - downlink_rate(&h, &scaled, 10.0).unwrap()).abs() < 1e-9);
        prop_assert!(a <= downlink_rate(&h, &h, 10.0).unwrap() + 1e-12);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn selection_is_sorted_distinct_and_in_range(n_c in 1usize..300, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let n_f = ((n_c as f64 * frac) as usize).max(1);
        let idx = select_subcarriers(n_c, n_f, seed).unwrap();
        prop_assert_eq!(idx.len(), n_f);
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(idx.iter().all(|&i| i < n_c));
        prop_assert!(select_subcarriers(n_c, n_c + 1, seed).is_err());
    }
}
