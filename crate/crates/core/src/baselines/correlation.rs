//! Correlation watermark: exploration noise replaced by a secret white sequence,
//! detected by normalized cross-correlation against high-passed glimpses.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glimpse::GlimpseSequence;
use crate::sigproc::fft;
use crate::sigproc::filter::design_highpass;
use crate::sigproc::resample::{best_rational, Resampler, DEFAULT_MAX_DENOMINATOR};
use crate::sigproc::rng::gaussian_stream;
use crate::watermark::derive_dim_seed;

pub const DEFAULT_CUTOFF_HZ: f64 = 0.5;
pub const DEFAULT_MAX_LAG_S: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CorrelationKey {
    pub seed: u64,
    pub cutoff_hz: f64,
    pub max_lag_s: f64,
}

impl CorrelationKey {
    pub fn new(seed: u64) -> Self {
        Self { seed, cutoff_hz: DEFAULT_CUTOFF_HZ, max_lag_s: DEFAULT_MAX_LAG_S }
    }
}

/// Seeded white Gaussian noise, one column per dimension.
pub fn correlation_generate(key: &CorrelationKey, n: usize, d: usize) -> Vec<Vec<f64>> {
    (1..=d as u64).map(|dim| gaussian_stream(derive_dim_seed(key.seed, dim), n)).collect()
}

fn unit_energy(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let centred: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let e = centred.iter().map(|v| v * v).sum::<f64>().sqrt();
    if e > 0.0 {
        centred.iter().map(|v| v / e).collect()
    } else {
        centred
    }
}

/// `max_{0 <= L <= max_lag} |sum_n g[n] w[n - L]|` for unit-energy `g`, `w`.
fn max_lagged_correlation(g: &[f64], w: &[f64], max_lag: usize) -> f64 {
    let n = (g.len() + w.len()).next_power_of_two();
    let gf = fft::real_forward(g, n);
    let wf = fft::real_forward(w, n);
    let mut r: Vec<_> = wf.iter().zip(&gf).map(|(a, b)| a.conj() * b).collect();
    fft::inverse_in_place(&mut r);
    let scale = 1.0 / n as f64;
    (0..=max_lag.min(n - 1)).map(|l| (r[l].re * scale).abs()).fold(0.0, f64::max)
}

pub fn correlation_detect(glimpses: &GlimpseSequence, key: &CorrelationKey, grid: &[f64]) -> Result<f64> {
    glimpses.validate()?;
    if grid.is_empty() {
        return Err(Error::config("detection grid is empty"));
    }
    let fg = glimpses.rate_hz;
    let hp = design_highpass(2, key.cutoff_hz / fg)?;
    let g: Vec<Vec<f64>> = glimpses.regularized().iter().map(|c| unit_energy(&hp.apply(c))).collect();
    let n = g[0].len();
    let max_lag = (key.max_lag_s * fg).round() as usize;
    if n < 2 {
        return Err(Error::InsufficientData { what: "glimpse sequence", got: n, need: 2 });
    }
    let max_rate = grid.iter().copied().fold(f64::MIN, f64::max);
    let base_len = (n as f64 * max_rate / fg).ceil() as usize + 16;
    let w = correlation_generate(key, base_len, g.len());

    let mut best = f64::NEG_INFINITY;
    for &rate in grid {
        let (p, q) = best_rational(fg / rate, DEFAULT_MAX_DENOMINATOR)?;
        let r = Resampler::cached(p, q)?;
        let score =
            g.iter().zip(&w).map(|(gd, wd)| max_lagged_correlation(gd, &unit_energy(&r.process_prefix(wd, n)), max_lag)).sum::<f64>()
                / g.len() as f64;
        best = best.max(score);
    }
    Ok(best)
}
