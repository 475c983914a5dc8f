//! Welch auto/cross spectra, complex coherency, and band averaging.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use crate::error::{Error, Result};

/// Segment taper. Only Hann is implemented.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Taper {
    #[default]
    Hann,
}

impl Taper {
    /// Periodic window of length `n`.
    pub fn window(self, n: usize) -> Vec<f64> {
        match self {
            Taper::Hann => (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect(),
        }
    }
}

/// Welch segmentation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Welch {
    pub fs: f64,
    pub win_len: usize,
    pub overlap: f64,
    pub taper: Taper,
}

impl Welch {
    pub fn new(fs: f64, win_len: usize) -> Self {
        Self { fs, win_len, overlap: 0.5, taper: Taper::Hann }
    }

    pub fn with_overlap(mut self, overlap: f64) -> Self {
        self.overlap = overlap;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::invalid(format!("sample rate must be positive, got {}", self.fs)));
        }
        if self.win_len < 2 {
            return Err(Error::invalid("Welch window must span at least 2 samples"));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::invalid(format!("overlap must lie in [0, 1), got {}", self.overlap)));
        }
        if n < self.win_len {
            return Err(Error::InsufficientData { what: "sequence", got: n, need: self.win_len });
        }
        Ok(())
    }

    fn step(&self) -> usize {
        let noverlap = (self.overlap * self.win_len as f64).floor() as usize;
        (self.win_len - noverlap).max(1)
    }

    fn segment_starts(&self, n: usize) -> impl Iterator<Item = usize> {
        let step = self.step();
        let last = n - self.win_len;
        (0..=last / step).map(move |k| k * step)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let df = self.fs / self.win_len as f64;
        (0..=self.win_len / 2).map(|k| k as f64 * df).collect()
    }

    /// Per-bin multiplier turning |X|^2 into a one-sided density.
    fn density_scale(&self, window: &[f64]) -> Vec<f64> {
        let base = 1.0 / (self.fs * window.iter().map(|w| w * w).sum::<f64>());
        let nbins = self.win_len / 2 + 1;
        (0..nbins)
            .map(|k| {
                let nyquist = self.win_len.is_multiple_of(2) && k == self.win_len / 2;
                if k == 0 || nyquist {
                    base
                } else {
                    2.0 * base
                }
            })
            .collect()
    }
}

/// Averaged auto- and cross-spectral densities of two equal-length signals.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    /// Hz, from 0 to fs/2 inclusive (for even window lengths).
    pub frequencies: Vec<f64>,
    pub sxx: Vec<f64>,
    pub syy: Vec<f64>,
    /// Cross density, `conj(X) * Y` convention.
    pub sxy: Vec<Complex64>,
    pub segment_count: usize,
}

/// Mean-removed, tapered copy of `seg` into a complex FFT buffer.
fn load_segment(seg: &[f64], window: &[f64], out: &mut [Complex64]) {
    let mean = seg.iter().sum::<f64>() / seg.len() as f64;
    for ((o, &s), &w) in out.iter_mut().zip(seg).zip(window) {
        *o = Complex64::new((s - mean) * w, 0.0);
    }
}

/// Welch estimate of `Sxx`, `Syy`, and `Sxy` from one pass over both signals.
pub fn welch_spectra(x: &[f64], y: &[f64], params: &Welch) -> Result<SpectralEstimate> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("signal lengths differ: {} vs {}", x.len(), y.len())));
    }
    params.validate(x.len())?;
    if x == y {
        let (frequencies, pxx) = welch_psd(x, params)?;
        let segment_count = params.segment_starts(x.len()).count();
        let sxy = pxx.iter().map(|&p| Complex64::new(p, 0.0)).collect();
        return Ok(SpectralEstimate { frequencies, syy: pxx.clone(), sxx: pxx, sxy, segment_count });
    }
    let l = params.win_len;
    let nbins = l / 2 + 1;
    let window = params.taper.window(l);
    let plan = fft::forward_plan(l);

    let mut sxx = vec![0.0; nbins];
    let mut syy = vec![0.0; nbins];
    let mut sxy = vec![Complex64::new(0.0, 0.0); nbins];
    let mut xb = vec![Complex64::new(0.0, 0.0); l];
    let mut yb = vec![Complex64::new(0.0, 0.0); l];
    let mut count = 0usize;

    for start in params.segment_starts(x.len()) {
        load_segment(&x[start..start + l], &window, &mut xb);
        load_segment(&y[start..start + l], &window, &mut yb);
        plan.process(&mut xb);
        plan.process(&mut yb);
        for k in 0..nbins {
            let (xk, yk) = (xb[k], yb[k]);
            sxx[k] += xk.norm_sqr();
            syy[k] += yk.norm_sqr();
            sxy[k] += xk.conj() * yk;
        }
        count += 1;
    }

    let scale = params.density_scale(&window);
    let inv = 1.0 / count as f64;
    for k in 0..nbins {
        let s = scale[k] * inv;
        sxx[k] *= s;
        syy[k] *= s;
        sxy[k] *= s;
    }
    Ok(SpectralEstimate { frequencies: params.frequencies(), sxx, syy, sxy, segment_count: count })
}

/// Welch power spectral density of a single signal.
pub fn welch_psd(x: &[f64], params: &Welch) -> Result<(Vec<f64>, Vec<f64>)> {
    params.validate(x.len())?;
    let l = params.win_len;
    let nbins = l / 2 + 1;
    let window = params.taper.window(l);
    let plan = fft::forward_plan(l);
    let mut pxx = vec![0.0; nbins];
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    let mut count = 0usize;
    for start in params.segment_starts(x.len()) {
        load_segment(&x[start..start + l], &window, &mut buf);
        plan.process(&mut buf);
        for (p, c) in pxx.iter_mut().zip(&buf) {
            *p += c.norm_sqr();
        }
        count += 1;
    }
    let scale = params.density_scale(&window);
    for (p, s) in pxx.iter_mut().zip(&scale) {
        *p *= s / count as f64;
    }
    Ok((params.frequencies(), pxx))
}

/// Complex coherency per frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherencyCurve {
    pub frequencies: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl CoherencyCurve {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn band_mean(&self, band: (f64, f64)) -> Result<f64> {
        band_mean_by(&self.frequencies, band, |k| self.values[k].norm())
    }
}

/// Denominators below this are treated as "no signal" and give zero coherency.
const DENOMINATOR_FLOOR: f64 = 1e-300;

impl SpectralEstimate {
    pub fn coherency(&self) -> CoherencyCurve {
        let values = self
            .sxy
            .iter()
            .zip(self.sxx.iter().zip(&self.syy))
            .map(|(&sxy, (&sxx, &syy))| {
                if sxx < DENOMINATOR_FLOOR || syy < DENOMINATOR_FLOOR {
                    return Complex64::new(0.0, 0.0);
                }
                let c = sxy / (sxx * syy).sqrt();
                let m = c.norm();
                if m > 1.0 {
                    c / m
                } else {
                    c
                }
            })
            .collect();
        CoherencyCurve { frequencies: self.frequencies.clone(), values }
    }
}

/// `Sxy / sqrt(Sxx Syy)` from a single Welch pass.
pub fn coherency(x: &[f64], y: &[f64], params: &Welch) -> Result<CoherencyCurve> {
    Ok(welch_spectra(x, y, params)?.coherency())
}

fn band_mean_by(frequencies: &[f64], band: (f64, f64), value: impl Fn(usize) -> f64) -> Result<f64> {
    let (lo, hi) = band;
    let (sum, n) =
        frequencies.iter().enumerate().filter(|(_, &f)| f >= lo && f <= hi).fold((0.0, 0usize), |(s, n), (k, _)| (s + value(k), n + 1));
    if n == 0 {
        return Err(Error::EmptyBand { low: lo, high: hi });
    }
    Ok(sum / n as f64)
}

/// Arithmetic mean of `values` over bins with `lo <= f <= hi`.
pub fn band_mean(frequencies: &[f64], values: &[f64], band: (f64, f64)) -> Result<f64> {
    band_mean_by(frequencies, band, |k| values[k])
}

/// Integrated density over `lo <= f <= hi` (rectangle rule on the bin grid).
pub fn band_power(frequencies: &[f64], density: &[f64], band: (f64, f64)) -> f64 {
    let df = if frequencies.len() > 1 { frequencies[1] - frequencies[0] } else { 0.0 };
    frequencies.iter().zip(density).filter(|(&f, _)| f >= band.0 && f <= band.1).map(|(_, &p)| p * df).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigproc::filter::design_lowpass;
    use crate::sigproc::rng::gaussian_stream;

    #[test]
    fn self_spectrum_is_real_and_equal() {
        let x = gaussian_stream(1, 4096);
        let est = welch_spectra(&x, &x, &Welch::new(100.0, 256)).unwrap();
        for (a, b) in est.sxx.iter().zip(&est.sxy) {
            assert_eq!(b.im, 0.0);
            assert_eq!(*a, b.re);
        }
        assert_eq!(est.sxx, est.syy);
    }

    #[test]
    fn frequencies_span_zero_to_nyquist() {
        let x = gaussian_stream(1, 1000);
        let est = welch_spectra(&x, &x, &Welch::new(100.0, 64)).unwrap();
        assert_eq!(est.frequencies[0], 0.0);
        assert_eq!(*est.frequencies.last().unwrap(), 50.0);
        assert!(est.frequencies.windows(2).all(|w| w[1] > w[0]));
        // 50% overlap: floor((1000 - 64) / 32) + 1 segments
        assert_eq!(est.segment_count, 30);
    }

    #[test]
    fn parseval_on_white_noise() {
        let x = gaussian_stream(2, 1 << 15);
        let (f, p) = welch_psd(&x, &Welch::new(100.0, 256)).unwrap();
        let total = band_power(&f, &p, (0.0, 50.0));
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((0.9..=1.1).contains(&total), "integrated {total}");
        assert!((total - var).abs() / var < 0.1);
    }

    #[test]
    fn pure_tone_peak() {
        let x: Vec<f64> = (0..2048).map(|i| (2.0 * PI * 10.0 * i as f64 / 100.0).sin()).collect();
        let (f, p) = welch_psd(&x, &Welch::new(100.0, 256)).unwrap();
        let k = p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((f[k] - 10.0).abs() <= 100.0 / 256.0);
    }

    #[test]
    fn rejects_short_input() {
        let x = vec![0.0; 10];
        assert!(matches!(welch_spectra(&x, &x, &Welch::new(1.0, 64)), Err(Error::InsufficientData { .. })));
        assert!(welch_spectra(&x, &x[..9], &Welch::new(1.0, 4)).is_err());
    }

    #[test]
    fn self_coherency_is_one() {
        let x = gaussian_stream(3, 2048);
        let c = coherency(&x, &x, &Welch::new(1.0, 128)).unwrap();
        for m in c.magnitudes() {
            assert!((m - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn filtered_copy_is_coherent_in_passband() {
        let x = gaussian_stream(4, 1 << 14);
        let y = design_lowpass(2, 0.2).unwrap().apply(&x);
        let c = coherency(&x, &y, &Welch::new(1.0, 256)).unwrap();
        assert!(c.band_mean((0.01, 0.15)).unwrap() >= 0.99);
    }

    #[test]
    fn independent_noise_has_low_coherency() {
        let x = gaussian_stream(5, 1 << 15);
        let y = gaussian_stream(6, 1 << 15);
        let c = coherency(&x, &y, &Welch::new(100.0, 256)).unwrap();
        assert!(c.band_mean((0.0, 50.0)).unwrap() < 0.25);
    }

    #[test]
    fn zero_signal_gives_zero_coherency() {
        let x = gaussian_stream(5, 512);
        let c = coherency(&x, &[0.0; 512], &Welch::new(1.0, 64)).unwrap();
        assert!(c.magnitudes().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn band_mean_cases() {
        let f: Vec<f64> = (0..11).map(|k| k as f64).collect();
        assert_eq!(band_mean(&f, &[0.7; 11], (2.0, 5.0)).unwrap(), 0.7);
        let v: Vec<f64> = (0..11).map(|k| if k % 2 == 0 { 1.0 } else { 0.0 }).collect();
        assert_eq!(band_mean(&f, &v, (2.0, 5.0)).unwrap(), 0.5);
        assert!(matches!(band_mean(&f, &v, (20.0, 30.0)), Err(Error::EmptyBand { .. })));
    }
}
