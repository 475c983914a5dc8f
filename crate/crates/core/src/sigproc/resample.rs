//! Rational-ratio polyphase resampling with a Kaiser-windowed sinc low-pass.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Default cap on the denominator of the rational ratio approximation.
pub const DEFAULT_MAX_DENOMINATOR: u64 = 1000;

/// Kaiser shape parameter of the anti-aliasing prototype.
pub const KAISER_BETA: f64 = 8.6;

/// Half-length of the prototype filter, in units of `max(up, down)`.
pub const HALF_TAPS_PER_RATE: usize = 20;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Closest fraction `p/q` to `x` with `q <= max_den`, via continued fractions
/// and the best semiconvergent at the cutoff.
pub fn best_rational(x: f64, max_den: u64) -> Result<(u64, u64)> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::invalid(format!("ratio must be positive and finite, got {x}")));
    }
    if max_den == 0 {
        return Err(Error::invalid("max denominator must be at least 1"));
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    loop {
        let a = r.floor();
        if a > u32::MAX as f64 {
            break;
        }
        let a = a as u64;
        let q2 = q0 + a * q1;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p0 + a * p1, q2);
        let frac = r - a as f64;
        if frac < 1e-12 {
            break;
        }
        r = 1.0 / frac;
    }
    if q1 == 0 {
        // x exceeds what fits; fall back to rounding with denominator 1.
        return Ok((x.round().max(1.0) as u64, 1));
    }
    let k = (max_den - q0) / q1;
    let (ps, qs) = (p0 + k * p1, q0 + k * q1);
    let err_conv = (p1 as f64 / q1 as f64 - x).abs();
    let err_semi = (ps as f64 / qs as f64 - x).abs();
    let (p, q) = if qs > 0 && err_semi < err_conv { (ps, qs) } else { (p1, q1) };
    let p = p.max(1);
    let g = gcd(p, q);
    Ok((p / g, q / g))
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Polyphase resampler by `up / down`.
#[derive(Debug, Clone)]
pub struct Resampler {
    up: usize,
    down: usize,
    half_len: usize,
    taps: Vec<f64>,
}

impl Resampler {
    pub fn new(up: u64, down: u64) -> Result<Self> {
        if up == 0 || down == 0 {
            return Err(Error::invalid("resampling factors must be positive"));
        }
        let g = gcd(up, down);
        let (up, down) = ((up / g) as usize, (down / g) as usize);
        if up == down {
            return Ok(Self { up: 1, down: 1, half_len: 0, taps: vec![1.0] });
        }
        let rate = up.max(down);
        let half_len = HALF_TAPS_PER_RATE * rate;
        let len = 2 * half_len + 1;
        let denom = bessel_i0(KAISER_BETA);
        let mut taps: Vec<f64> = (0..len)
            .map(|n| {
                let t = n as f64 - half_len as f64;
                let r = t / half_len as f64;
                let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / denom;
                sinc(t / rate as f64) * w
            })
            .collect();
        // Unit DC gain per output phase after zero-stuffing.
        let sum: f64 = taps.iter().sum();
        for t in &mut taps {
            *t *= up as f64 / sum;
        }
        Ok(Self { up, down, half_len, taps })
    }

    pub fn from_ratio(ratio: f64, max_den: u64) -> Result<Self> {
        let (p, q) = best_rational(ratio, max_den)?;
        Self::new(p, q)
    }

    /// Shared instance for the reduced `(up, down)`; designs are kept for the
    /// life of the process.
    pub fn cached(up: u64, down: u64) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<(u64, u64), Arc<Resampler>>>> = OnceLock::new();
        if up == 0 || down == 0 {
            return Err(Error::invalid("resampling factors must be positive"));
        }
        let g = gcd(up, down);
        let k = (up / g, down / g);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(r) = cache.lock().expect("resampler cache").get(&k) {
            return Ok(Arc::clone(r));
        }
        let r = Arc::new(Self::new(k.0, k.1)?);
        cache.lock().expect("resampler cache").insert(k, Arc::clone(&r));
        Ok(r)
    }

    pub fn factors(&self) -> (usize, usize) {
        (self.up, self.down)
    }

    /// Full output length `ceil(n * up / down)`.
    pub fn output_len(&self, n: usize) -> usize {
        (n * self.up).div_ceil(self.down)
    }

    /// First `min(limit, output_len(n))` output samples, aligned so that output
    /// `k` sits at input time `k * down / up` (group delay removed).
    pub fn process_prefix(&self, x: &[f64], limit: usize) -> Vec<f64> {
        let n_out = self.output_len(x.len()).min(limit);
        if self.up == 1 && self.down == 1 {
            return x[..n_out].to_vec();
        }
        let (p, hl) = (self.up, self.half_len);
        let last_tap = 2 * hl;
        let mut y = Vec::with_capacity(n_out);
        for k in 0..n_out {
            // Position of the filter centre in the zero-stuffed stream.
            let m = k * self.down + hl;
            let n_hi = (m / p).min(x.len().saturating_sub(1));
            let n_lo = m.saturating_sub(last_tap).div_ceil(p);
            let mut acc = 0.0;
            if n_lo <= n_hi && !x.is_empty() {
                let mut tap = m - n_lo * p;
                for &xv in &x[n_lo..=n_hi] {
                    acc += xv * self.taps[tap];
                    tap = tap.wrapping_sub(p);
                }
            }
            y.push(acc);
        }
        y
    }

    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        self.process_prefix(x, usize::MAX)
    }
}

/// Resamples each channel by the best rational approximation of `ratio`.
pub fn resample_rational(channels: &[Vec<f64>], ratio: f64, max_den: u64) -> Result<Vec<Vec<f64>>> {
    let r = Resampler::from_ratio(ratio, max_den)?;
    Ok(channels.iter().map(|c| r.process(c)).collect())
}
