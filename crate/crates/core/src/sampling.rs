//! Frame timestamp selection.
//!
//! Both modes split `[0, d]` into `F` equal intervals. `Uniform` takes each
//! interval's midpoint; `JitteredRandom` draws one point uniformly inside each
//! interval, which amounts to adding bounded noise to the uniform grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    #[default]
    Uniform,
    JitteredRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub num_frames: usize,
    #[serde(default)]
    pub mode: SamplingMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SamplingConfig {
    pub fn uniform(num_frames: usize) -> Self {
        Self {
            num_frames,
            mode: SamplingMode::Uniform,
            seed: None,
        }
    }

    pub fn jittered(num_frames: usize, seed: Option<u64>) -> Self {
        Self {
            num_frames,
            mode: SamplingMode::JitteredRandom,
            seed,
        }
    }
}

/// Boundaries `0 = b_0 < b_1 < ... < b_F = d` of the `F` sampling intervals.
pub fn interval_boundaries(num_frames: usize, duration_s: f64) -> Vec<f64> {
    let step = duration_s / num_frames as f64;
    (0..=num_frames)
        .map(|i| {
            if i == num_frames {
                duration_s
            } else {
                i as f64 * step
            }
        })
        .collect()
}

pub fn sample_timestamps(cfg: &SamplingConfig, duration_s: f64) -> Result<Vec<f64>> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::invalid(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    if cfg.num_frames == 0 {
        return Err(Error::invalid("num_frames must be at least 1"));
    }
    let f = cfg.num_frames;
    match cfg.mode {
        SamplingMode::Uniform => Ok((1..=f)
            .map(|i| (i as f64 - 0.5) * duration_s / f as f64)
            .collect()),
        SamplingMode::JitteredRandom => {
            let mut rng = match cfg.seed {
                Some(seed) => ChaCha8Rng::seed_from_u64(seed),
                None => ChaCha8Rng::from_entropy(),
            };
            let bounds = interval_boundaries(f, duration_s);
            Ok(bounds
                .windows(2)
                .map(|w| {
                    let (lo, hi) = (w[0], w[1]);
                    let t = rng.gen_range(lo..hi);
                    // keep the draw strictly inside the open interval
                    if t <= lo || t >= hi {
                        0.5 * (lo + hi)
                    } else {
                        t
                    }
                })
                .collect())
        }
    }
}
