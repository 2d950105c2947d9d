use csifb::chanmodel::{
    generate_dataset, generate_sample, los_component, mean_channel, to_delay, to_frequency, Dataset, Split,
};
use csifb::{CMatrix, GeometryConfig};
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

/// Expected per-tap energy fraction for 16 taps, decay 4.0, LOS fraction 0.4,
/// computed offline from `0.4·[l = 0] + 0.6·exp(-l/4) / Σ exp(-k/4)`.
const PROFILE_DECAY4: [f64; 16] = [
    0.535195726259,
    0.105290537478,
    0.082000353038,
    0.063861939158,
    0.049735728225,
    0.038734224088,
    0.030166244051,
    0.02349349449,
    0.018296751906,
    0.014249524712,
    0.011097541004,
    0.008642773624,
    0.006730998866,
    0.005242107188,
    0.004082557183,
    0.003179498731,
];

fn naive_dft(h: &CMatrix) -> CMatrix {
    let n = h.nrows();
    let scale = 1.0 / (n as f64).sqrt();
    Array2::from_shape_fn(h.dim(), |(k, t)| {
        (0..n)
            .map(|l| {
                let angle = -2.0 * std::f64::consts::PI * (k * l) as f64 / n as f64;
                h[[l, t]] * Complex64::from_polar(scale, angle)
            })
            .sum()
    })
}

fn energy(h: &CMatrix) -> f64 {
    h.iter().map(|z| z.norm_sqr()).sum()
}

fn matrix(n_c: usize, n_t: usize) -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), n_c * n_t).prop_map(move |v| {
        Array2::from_shape_vec((n_c, n_t), v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()).unwrap()
    })
}

#[test]
fn per_tap_power_follows_the_exponential_profile() {
    let g = GeometryConfig {
        n_clusters: 3,
        rays_per_cluster: 8,
        max_delay_taps: 16,
        delay_decay: 4.0,
        ..GeometryConfig::default()
    };
    let (n_c, n_t, draws) = (64, 8, 1000);
    let mut acc = vec![0.0; n_c];
    for seed in 0..draws {
        let s = generate_sample(&g, n_c, n_t, 7 + seed).unwrap();
        for (l, row) in s.h_d.rows().into_iter().enumerate() {
            acc[l] += row.iter().map(|z| z.norm_sqr()).sum::<f64>() / n_c as f64;
        }
    }
    for (l, expected) in PROFILE_DECAY4.iter().enumerate() {
        let got = acc[l] / draws as f64;
        assert!((got - expected).abs() <= 0.05 * expected, "tap {l}: {got} vs {expected}");
    }
    assert!(acc[16..].iter().all(|&p| p == 0.0));
    let profile = g.tap_power_profile();
    for (a, b) in profile.iter().zip(PROFILE_DECAY4) {
        assert!((a - b).abs() < 1e-11);
    }
}

#[test]
fn delay_domain_matches_naive_dft() {
    let s = generate_sample(&GeometryConfig::default(), 64, 8, 11).unwrap();
    let fast = to_frequency(&s.h_d).unwrap();
    let slow = naive_dft(&s.h_d);
    for (a, b) in fast.iter().zip(slow.iter()) {
        assert!((a - b).norm() < 1e-9);
    }
    assert!((energy(&fast) - 64.0).abs() < 1e-9, "rows have unit mean squared norm");
}

#[test]
fn pure_los_mean_is_the_los_component() {
    let g = GeometryConfig { los_power_fraction: 1.0, ..GeometryConfig::default() };
    let tmp = tempfile::tempdir().unwrap();
    let (train, _) = generate_dataset(&g, 32, 4, 5, 1, 3, tmp.path()).unwrap();
    let mean = mean_channel(&train).unwrap();
    let los = los_component(&g, 32, 4);
    for (a, b) in mean.iter().zip(los.iter()) {
        assert!((a - b).norm() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn mean_channel_matches_brute_force_sum() {
    let tmp = tempfile::tempdir().unwrap();
    let (train, _) = generate_dataset(&GeometryConfig::default(), 32, 4, 10, 1, 5, tmp.path()).unwrap();
    let mean = mean_channel(&train).unwrap();
    for k in 0..32 {
        for t in 0..4 {
            let mut re = 0.0;
            let mut im = 0.0;
            for s in &train.samples {
                re += s.h_d[[k, t]].re;
                im += s.h_d[[k, t]].im;
            }
            assert!((mean[[k, t]].re - re / 10.0).abs() < 1e-12);
            assert!((mean[[k, t]].im - im / 10.0).abs() < 1e-12);
        }
    }
}

#[test]
fn regeneration_is_byte_identical_and_loads_back() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        generate_dataset(&GeometryConfig::default(), 64, 8, 20, 5, 42, d.path()).unwrap();
    }
    for split in ["train", "test"] {
        for file in ["manifest.json", "h_d.bin", "h_u.bin"] {
            let a = std::fs::read(dirs[0].path().join(split).join(file)).unwrap();
            let b = std::fs::read(dirs[1].path().join(split).join(file)).unwrap();
            assert_eq!(a, b, "{split}/{file}");
        }
    }
    let test = Dataset::load(&dirs[0].path().join("test")).unwrap();
    assert_eq!(test.manifest.split, Split::Test);
    assert_eq!(test.len(), 5);
    let other_seed = tempfile::tempdir().unwrap();
    generate_dataset(&GeometryConfig::default(), 64, 8, 20, 5, 43, other_seed.path()).unwrap();
    assert_ne!(
        std::fs::read(dirs[0].path().join("train/h_d.bin")).unwrap(),
        std::fs::read(other_seed.path().join("train/h_d.bin")).unwrap()
    );
}

#[test]
fn paper_split_sizes_are_expressible() {
    let s = csifb::config::RunConfig::paper();
    assert_eq!((s.dataset.n_train, s.dataset.n_test), (80_000, 20_000));
    assert_eq!((s.system.n_c, s.system.n_t), (256, 32));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fft_is_unitary_and_invertible(h in matrix(16, 3)) {
        let f = to_frequency(&h).unwrap();
        let e = energy(&h);
        prop_assert!((energy(&f) - e).abs() <= 1e-9 * e.max(1.0));
        let back = to_delay(&f).unwrap();
        for (a, b) in back.iter().zip(h.iter()) {
            prop_assert!((a - b).norm() <= 1e-9 * e.sqrt().max(1.0));
        }
    }

    #[test]
    fn samples_are_normalized_and_deterministic(seed in any::<u64>(), n_t in 1usize..6) {
        let g = GeometryConfig::default();
        let a = generate_sample(&g, 32, n_t, seed).unwrap();
        let b = generate_sample(&g, 32, n_t, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!((energy(&a.h_d) - 32.0).abs() < 1e-9);
        prop_assert!((energy(&a.h_u) - 32.0).abs() < 1e-9);
        prop_assert!(a.h_d.rows().into_iter().skip(g.max_delay_taps).all(|r| r.iter().all(|z| z.norm() == 0.0)));
    }
}
