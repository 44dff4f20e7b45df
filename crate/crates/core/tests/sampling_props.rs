use proptest::prelude::*;

use vtg_harness::sampling::{interval_boundaries, sample_timestamps, SamplingConfig};

#[test]
fn uniform_closed_form() {
    for f in [1usize, 4, 20, 60] {
        for d in [1.0, 29.5, 150.0, 3600.0] {
            let ts = sample_timestamps(&SamplingConfig::uniform(f), d).unwrap();
            assert_eq!(ts.len(), f);
            for (i, t) in ts.iter().enumerate() {
                let expected = (i as f64 + 0.5) * d / f as f64;
                assert!((t - expected).abs() < 1e-9 * d);
            }
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    assert!(sample_timestamps(&SamplingConfig::uniform(0), 10.0).is_err());
    assert!(sample_timestamps(&SamplingConfig::uniform(4), 0.0).is_err());
    assert!(sample_timestamps(&SamplingConfig::uniform(4), f64::NAN).is_err());
}

proptest! {
    #[test]
    fn jitter_is_seeded_and_stays_in_its_interval(f in 1usize..80, d in 0.5f64..5000.0, seed in any::<u64>()) {
        let cfg = SamplingConfig::jittered(f, Some(seed));
        let a = sample_timestamps(&cfg, d).unwrap();
        prop_assert_eq!(&a, &sample_timestamps(&cfg, d).unwrap());
        let b = interval_boundaries(f, d);
        prop_assert_eq!(a.len(), f);
        for (i, t) in a.iter().enumerate() {
            prop_assert!(*t > b[i] && *t < b[i + 1], "frame {} at {} outside ({}, {})", i, t, b[i], b[i + 1]);
        }
    }

    #[test]
    fn uniform_is_increasing_and_inside(f in 1usize..200, d in 0.1f64..10000.0) {
        let ts = sample_timestamps(&SamplingConfig::uniform(f), d).unwrap();
        prop_assert!(ts.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(ts[0] > 0.0 && ts[f - 1] < d);
    }
}
