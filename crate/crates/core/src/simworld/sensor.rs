use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::episode::EpisodeTrace;
use crate::error::{Error, Result};
use crate::glimpse::GlimpseSequence;
use crate::sigproc::rng::{mix_seed, Xoshiro256};

/// How many glimpses the sensor loses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum GlimpseDrop {
    Count(usize),
    Fraction(f64),
}

/// Remote observer of the plant output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GlimpseSensor {
    pub rate_hz: f64,
    #[serde(default)]
    pub noise_std: f64,
    /// Relative standard deviation of the sampling interval.
    #[serde(default)]
    pub jitter: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop: Option<GlimpseDrop>,
    /// Delay between policy start and the first glimpse, seconds.
    #[serde(default)]
    pub offset_s: f64,
    /// Camera tilt `[about x, about y]` in degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection_deg: Option<[f64; 2]>,
    /// Zero-based plant outputs to observe; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<usize>>,
    /// Number of glimpses to take before drops; until the trace ends when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl GlimpseSensor {
    pub fn ideal(rate_hz: f64) -> Self {
        Self { rate_hz, noise_std: 0.0, jitter: 0.0, drop: None, offset_s: 0.0, projection_deg: None, channels: None, count: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(Error::config("glimpse rate must be positive"));
        }
        if !(self.noise_std >= 0.0 && self.jitter >= 0.0 && self.offset_s >= 0.0) {
            return Err(Error::config("sensor noise, jitter and offset must be non-negative"));
        }
        if let Some(GlimpseDrop::Fraction(f)) = self.drop {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::config(format!("drop fraction must lie in [0, 1), got {f}")));
            }
        }
        Ok(())
    }
}

const JITTER_TAG: u64 = 1;
const NOISE_TAG: u64 = 2;
const DROP_TAG: u64 = 3;

/// Rotates `(vx, vy, 0)` about x by `ax`, then about y by `ay`, and keeps the
/// in-plane components.
fn project(vx: f64, vy: f64, ax: f64, ay: f64) -> (f64, f64) {
    let (sx, cx) = ax.sin_cos();
    let (sy, cy) = ay.sin_cos();
    let (y1, z1) = (vy * cx, vy * sx);
    (vx * cy + z1 * sy, y1)
}

/// Samples the trace's plant outputs with the sensor's alterations applied.
pub fn sense(trace: &EpisodeTrace, sensor: &GlimpseSensor, seed: u64) -> Result<GlimpseSequence> {
    sensor.validate()?;
    let fg = sensor.rate_hz;
    let dt = trace.dt;
    let t_end = trace.duration();
    if sensor.offset_s > t_end {
        return Err(Error::config(format!("sensor offset {}s lies beyond the trace end {}s", sensor.offset_s, t_end)));
    }
    let channels: Vec<usize> = sensor.channels.clone().unwrap_or_else(|| (0..trace.outputs.len()).collect());
    if let Some(&bad) = channels.iter().find(|&&c| c >= trace.outputs.len()) {
        return Err(Error::config(format!("sensor channel {bad} does not exist")));
    }
    if sensor.projection_deg.is_some() && channels.len() != 2 {
        return Err(Error::config("projection needs exactly two observed channels"));
    }

    let mut jitter_rng = Xoshiro256::from_seed(mix_seed(seed, &[JITTER_TAG]));
    let mut times = Vec::new();
    let mut t = sensor.offset_s;
    let mut i = 0usize;
    loop {
        if let Some(c) = sensor.count {
            if times.len() == c {
                break;
            }
        }
        if sensor.jitter == 0.0 {
            t = sensor.offset_s + i as f64 / fg;
        }
        if t > t_end + 1e-9 * dt {
            if sensor.count.is_some() {
                return Err(Error::config("trace is too short for the requested glimpse count"));
            }
            break;
        }
        times.push(t.min(t_end));
        i += 1;
        if sensor.jitter > 0.0 {
            let interval = 1.0 / fg + sensor.jitter / fg * jitter_rng.normal_pair().0;
            t += interval.max(0.1 / fg);
        }
    }

    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); channels.len()];
    let last = trace.outputs[0].len() - 1;
    for &ti in &times {
        let mut pos = ti / dt;
        if (pos - pos.round()).abs() < 1e-9 {
            pos = pos.round();
        }
        let j = (pos.floor() as usize).min(last);
        let frac = if j == last { 0.0 } else { pos - j as f64 };
        for (col, &ch) in cols.iter_mut().zip(&channels) {
            let y = &trace.outputs[ch];
            let v = if frac == 0.0 { y[j] } else { y[j] + frac * (y[j + 1] - y[j]) };
            col.push(v);
        }
    }

    if let Some([ax, ay]) = sensor.projection_deg {
        let (ax, ay) = (ax.to_radians(), ay.to_radians());
        for i in 0..times.len() {
            let (x, y) = project(cols[0][i], cols[1][i], ax, ay);
            cols[0][i] = x;
            cols[1][i] = y;
        }
    }

    if sensor.noise_std > 0.0 {
        let mut rng = Xoshiro256::from_seed(mix_seed(seed, &[NOISE_TAG]));
        for col in &mut cols {
            for v in col.iter_mut() {
                *v += sensor.noise_std * rng.normal_pair().0;
            }
        }
    }

    let n = times.len();
    let drop = match sensor.drop {
        None => 0,
        Some(GlimpseDrop::Count(c)) => c,
        Some(GlimpseDrop::Fraction(f)) => (f * n as f64).round() as usize,
    };
    if drop >= n {
        return Err(Error::config(format!("cannot drop {drop} of {n} glimpses")));
    }
    let mut keep = vec![true; n];
    if drop > 0 {
        let mut rng = Xoshiro256::from_seed(mix_seed(seed, &[DROP_TAG]));
        let mut idx: Vec<usize> = (0..n).collect();
        for k in 0..drop {
            let r = k + rng.below((n - k) as u64) as usize;
            idx.swap(k, r);
            keep[idx[k]] = false;
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
    let t0 = times[kept[0]];
    let timestamps = kept.iter().map(|&i| times[i] - t0).collect();
    let samples = cols.iter().map(|c| kept.iter().map(|&i| c[i]).collect()).collect();
    GlimpseSequence::new(samples, fg, timestamps)
}
