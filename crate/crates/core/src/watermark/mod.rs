//! The colored-noise watermark: owner key, generation, and action injection.

mod schedule;

pub use schedule::{smooth_scale, ExplorationScaleSchedule, ScheduleMode};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigproc::filter::design_bandpass;
use crate::sigproc::rng::{gaussian_stream, splitmix64, GOLDEN_GAMMA};

/// Prototype order of the watermark band-pass filter.
pub const FILTER_ORDER: usize = 4;

/// Owner identity: a seed and the secret frequency band in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SecretKey {
    pub seed: u64,
    pub band_hz: [f64; 2],
}

impl SecretKey {
    pub fn new(seed: u64, band_hz: [f64; 2]) -> Result<Self> {
        let key = Self { seed, band_hz };
        key.validate()?;
        Ok(key)
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.band_hz;
        let reason = if !(lo.is_finite() && hi.is_finite()) {
            "band edges must be finite"
        } else if lo <= 0.0 {
            "band low edge must be positive"
        } else if lo >= hi {
            "band low edge must be below high edge"
        } else {
            return Ok(());
        };
        Err(Error::BandEdge { low: lo, high: hi, reason })
    }

    pub fn band(&self) -> (f64, f64) {
        (self.band_hz[0], self.band_hz[1])
    }

    /// Same band, different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("key serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let key: Self = serde_json::from_str(text).map_err(|e| Error::config(format!("key file: {e}")))?;
        key.validate()?;
        Ok(key)
    }
}

/// Known bounds on the (unknown) policy rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PolicyRateBounds {
    pub f_lb: f64,
    pub f_ub: f64,
}

impl PolicyRateBounds {
    pub fn new(f_lb: f64, f_ub: f64) -> Result<Self> {
        let b = Self { f_lb, f_ub };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_lb.is_finite() && self.f_ub.is_finite() && self.f_lb > 0.0 && self.f_lb <= self.f_ub) {
            return Err(Error::config(format!("policy rate bounds must satisfy 0 < f_lb <= f_ub, got [{}, {}]", self.f_lb, self.f_ub)));
        }
        Ok(())
    }

    pub fn contains(&self, rate: f64) -> bool {
        rate >= self.f_lb && rate <= self.f_ub
    }

    /// Digital band `(f_min / f_ub, f_max / f_lb)` that holds the physical band
    /// for every admissible policy rate.
    pub fn digital_band(&self, key: &SecretKey) -> Result<(f64, f64)> {
        key.validate()?;
        self.validate()?;
        let (lo, hi) = (key.band_hz[0] / self.f_ub, key.band_hz[1] / self.f_lb);
        if hi >= 0.5 {
            return Err(Error::BandEdge { low: lo, high: hi, reason: "band high edge over the lowest policy rate reaches policy Nyquist" });
        }
        Ok((lo, hi))
    }
}

/// Per-dimension seed: splitmix64 of the owner seed XOR `d` times the golden gamma.
pub fn derive_dim_seed(seed: u64, d: u64) -> u64 {
    splitmix64(seed ^ d.wrapping_mul(GOLDEN_GAMMA))
}

/// Unit-variance colored Gaussian noise, one column per action dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct WatermarkSequence {
    /// `columns[d][k]` is dimension `d + 1` at policy step `k`.
    pub columns: Vec<Vec<f64>>,
    pub key: SecretKey,
    pub bounds: PolicyRateBounds,
}

impl WatermarkSequence {
    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, k: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[k]).collect()
    }

    /// CSV with header `dim_1,...,dim_D` and one row per step.
    pub fn to_csv(&self) -> String {
        columns_to_csv(&self.columns, "dim_")
    }
}

pub(crate) fn columns_to_csv(columns: &[Vec<f64>], prefix: &str) -> String {
    let n = columns.first().map_or(0, Vec::len);
    let mut out = String::with_capacity(n * columns.len() * 24);
    let header: Vec<String> = (1..=columns.len()).map(|d| format!("{prefix}{d}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for k in 0..n {
        for (d, c) in columns.iter().enumerate() {
            if d > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.17e}", c[k]));
        }
        out.push('\n');
    }
    out
}

/// Population standard deviation.
pub(crate) fn population_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Band-passed white noise for one dimension, scaled to unit population std.
fn colored_column(seed: u64, n: usize, filter: &crate::sigproc::IirFilter) -> Vec<f64> {
    let mut w = filter.apply(&gaussian_stream(seed, n));
    let sd = population_std(&w);
    for v in &mut w {
        *v /= sd;
    }
    w
}

/// Generates the `n x d` watermark for `key` under the given rate bounds.
pub fn generate_watermark(key: &SecretKey, n: usize, d: usize, bounds: &PolicyRateBounds) -> Result<WatermarkSequence> {
    let (lo, hi) = bounds.digital_band(key)?;
    let filter = design_bandpass(FILTER_ORDER, lo, hi)?;
    let need = 10 * FILTER_ORDER + 1;
    if n < need {
        return Err(Error::InsufficientData { what: "watermark length", got: n, need });
    }
    if d == 0 {
        return Err(Error::invalid("watermark needs at least one dimension"));
    }
    let columns = (1..=d as u64).map(|dim| colored_column(derive_dim_seed(key.seed, dim), n, &filter)).collect();
    Ok(WatermarkSequence { columns, key: *key, bounds: *bounds })
}

/// `mean + scale * w`, optionally hard-clipped to `[-limit, limit]` last.
pub fn inject_action(mean: &[f64], scale: &[f64], w: &[f64], saturation: Option<f64>) -> Vec<f64> {
    mean.iter()
        .zip(scale)
        .zip(w)
        .map(|((&m, &s), &wk)| {
            let a = m + s * wk;
            match saturation {
                Some(l) => a.clamp(-l, l),
                None => a,
            }
        })
        .collect()
}
