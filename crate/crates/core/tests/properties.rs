use proptest::prelude::*;

use conoco::baselines::{correlation_generate, multisine_generate, CorrelationKey, MultiSineKey};
use conoco::harness::metrics::mean;
use conoco::harness::{bootstrap_ci, roc_auc};
use conoco::sigproc::{coherency, design_bandpass, gaussian_stream, welch_psd, Resampler, Welch};
use conoco::watermark::{derive_dim_seed, generate_watermark, PolicyRateBounds, SecretKey};

fn bounds() -> PolicyRateBounds {
    PolicyRateBounds::new(19.0, 21.0).unwrap()
}

fn std_of(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

fn scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![-5.0..5.0f64, (-3i32..3).prop_map(f64::from)], 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn auc_swapping_classes_complements(p in scores(), n in scores()) {
        let a = roc_auc(&p, &n).unwrap().auc;
        let b = roc_auc(&n, &p).unwrap().auc;
        prop_assert!((a + b - 1.0).abs() < 1e-12, "{a} + {b}");
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn auc_invariant_under_increasing_maps(p in scores(), n in scores(), scale in 0.01..100.0f64, shift in -10.0..10.0f64) {
        let base = roc_auc(&p, &n).unwrap();
        let maps: [&dyn Fn(f64) -> f64; 3] = [&|v| scale * v + shift, &|v| v * v * v, &|v| (v / 3.0).exp()];
        for f in maps {
            let q: Vec<f64> = p.iter().map(|&v| f(v)).collect();
            let m: Vec<f64> = n.iter().map(|&v| f(v)).collect();
            let r = roc_auc(&q, &m).unwrap();
            prop_assert_eq!(r.auc, base.auc);
            prop_assert_eq!(&r.points, &base.points);
        }
    }

    #[test]
    fn roc_points_are_monotone(p in scores(), n in scores()) {
        let r = roc_auc(&p, &n).unwrap();
        prop_assert_eq!(r.points.first().copied(), Some((0.0, 0.0)));
        prop_assert_eq!(r.points.last().copied(), Some((1.0, 1.0)));
        for w in r.points.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn bootstrap_is_reproducible_and_ordered(v in prop::collection::vec(-10.0..10.0f64, 2..60), seed: u64) {
        let a = bootstrap_ci(&v, mean, 0.9, 200, seed).unwrap();
        let b = bootstrap_ci(&v, mean, 0.9, 200, seed).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.lo <= a.hi);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(a.lo >= lo - 1e-12 && a.hi <= hi + 1e-12);
    }

    #[test]
    fn coherency_magnitude_is_bounded(seed: u64, mix in 0.0..1.0f64, win in prop::sample::select(vec![16usize, 32, 64, 128])) {
        let x = gaussian_stream(seed, 1024);
        let z = gaussian_stream(seed ^ 0xabc, 1024);
        let y: Vec<f64> = x.iter().zip(&z).map(|(a, b)| mix * a + (1.0 - mix) * b).collect();
        let c = coherency(&x, &y, &Welch::new(100.0, win)).unwrap();
        for m in c.magnitudes() {
            prop_assert!(m.is_finite() && m <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn welch_power_matches_variance(seed: u64, sd in 0.1..10.0f64) {
        let x: Vec<f64> = gaussian_stream(seed, 1 << 14).into_iter().map(|v| sd * v).collect();
        let (f, p) = welch_psd(&x, &Welch::new(50.0, 256)).unwrap();
        let df = f[1] - f[0];
        let total: f64 = p.iter().sum::<f64>() * df;
        let var = std_of(&x).powi(2);
        prop_assert!((total / var - 1.0).abs() < 0.1, "{total} vs {var}");
    }

    #[test]
    fn bandpass_designs_are_stable(order in 1usize..8, lo in 0.01..0.3f64, width in 0.02..0.15f64) {
        let f = design_bandpass(order, lo, lo + width).unwrap();
        prop_assert!(f.is_stable());
        prop_assert!(f.magnitude(lo + width / 2.0) > 0.5);
    }

    #[test]
    fn resampler_length_is_ceiling(up in 1u64..12, down in 1u64..12, n in 1usize..500) {
        let r = Resampler::new(up, down).unwrap();
        let (p, q) = r.factors();
        let want = (n * p).div_ceil(q);
        prop_assert_eq!(r.output_len(n), want);
        prop_assert_eq!(r.process(&vec![1.0; n]).len(), want);
    }

    #[test]
    fn dim_seeds_never_collide(seed: u64, a in 1u64..64, b in 1u64..64) {
        prop_assume!(a != b);
        prop_assert_ne!(derive_dim_seed(seed, a), derive_dim_seed(seed, b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn watermark_is_pure_and_unit_variance(seed: u64, n in 200usize..3000, d in 1usize..4) {
        let key = SecretKey::new(seed, [1.2, 2.49]).unwrap();
        let w = generate_watermark(&key, n, d, &bounds()).unwrap();
        let again = generate_watermark(&key, n, d, &bounds()).unwrap();
        prop_assert_eq!(w.to_csv(), again.to_csv());
        prop_assert_eq!(w.dims(), d);
        prop_assert_eq!(w.len(), n);
        for c in &w.columns {
            prop_assert!((std_of(c) - 1.0).abs() < 1e-9);
        }
        let wider = generate_watermark(&key, n, d + 1, &bounds()).unwrap();
        prop_assert_eq!(&wider.columns[..d], &w.columns[..]);
    }

    #[test]
    fn watermark_is_strongly_autocorrelated(seed: u64) {
        let key = SecretKey::new(seed, [1.2, 2.49]).unwrap();
        let w = generate_watermark(&key, 4000, 2, &bounds()).unwrap();
        for c in &w.columns {
            let m = mean(c);
            let num: f64 = c.windows(2).map(|p| (p[0] - m) * (p[1] - m)).sum();
            let den: f64 = c.iter().map(|v| (v - m) * (v - m)).sum();
            prop_assert!(num / den > 0.3);
        }
    }

    #[test]
    fn key_json_round_trips(seed: u64, lo in 0.01..5.0f64, width in 0.01..5.0f64) {
        let key = SecretKey::new(seed, [lo, lo + width]).unwrap();
        prop_assert_eq!(SecretKey::from_json(&key.to_json()).unwrap(), key);
    }

    #[test]
    fn baselines_emit_unit_variance(seed: u64, tones in 1usize..12) {
        let key = SecretKey::new(seed, [1.2, 2.49]).unwrap();
        let m = multisine_generate(&MultiSineKey::new(&key, tones), 2000, 2, &bounds()).unwrap();
        for c in &m.columns {
            prop_assert!((std_of(c) - 1.0).abs() < 1e-9);
        }
        let c = correlation_generate(&CorrelationKey::new(seed), 2000, 2);
        prop_assert_eq!(c.clone(), correlation_generate(&CorrelationKey::new(seed), 2000, 2));
        for col in &c {
            // white N(0, 1) draws: std of 2000 samples has sd 0.016
            prop_assert!((std_of(col) - 1.0).abs() < 0.07);
        }
    }
}
