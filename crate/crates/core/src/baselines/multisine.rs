//! Multi-sine watermark: a few secret tones per action dimension.
//!
//! Each dimension owns `K` secret frequencies in the digital band, each tagged
//! with a sign. Positive tones are embedded; negative tones mark frequencies
//! that must stay quiet. The detector sums the glimpse energy near each secret
//! frequency with its sign, relative to the total energy in the band.

use std::f64::consts::PI;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glimpse::GlimpseSequence;
use crate::sigproc::fft;
use crate::sigproc::rng::{mix_seed, Xoshiro256};
use crate::sigproc::Taper;
use crate::watermark::{derive_dim_seed, population_std, PolicyRateBounds, SecretKey, WatermarkSequence};

pub const DEFAULT_TONES: usize = 8;

/// Fraction of the digital band kept clear at each edge when drawing tones.
const EDGE_MARGIN: f64 = 0.05;

const TONE_TAG: u64 = 0x6d73;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MultiSineKey {
    pub seed: u64,
    pub band_hz: [f64; 2],
    pub tones: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    /// Cycles per policy step.
    pub freq: f64,
    pub sign: f64,
    pub phase: f64,
}

impl MultiSineKey {
    pub fn new(key: &SecretKey, tones: usize) -> Self {
        Self { seed: key.seed, band_hz: key.band_hz, tones }
    }

    fn secret(&self) -> SecretKey {
        SecretKey { seed: self.seed, band_hz: self.band_hz }
    }

    /// Secret tones of dimension `dim` (1-based).
    pub fn tones_for(&self, dim: u64, bounds: &PolicyRateBounds) -> Result<Vec<Tone>> {
        if self.tones == 0 {
            return Err(Error::invalid("multi-sine needs at least one tone"));
        }
        let (lo, hi) = bounds.digital_band(&self.secret())?;
        let margin = EDGE_MARGIN * (hi - lo);
        let (lo, hi) = (lo + margin, hi - margin);
        let mut rng = Xoshiro256::from_seed(mix_seed(derive_dim_seed(self.seed, dim), &[TONE_TAG]));
        let mut spacing = (hi - lo) / (2 * self.tones) as f64;
        let mut tones: Vec<Tone> = Vec::with_capacity(self.tones);
        let mut attempts = 0;
        while tones.len() < self.tones {
            let freq = rng.uniform(lo, hi);
            let sign = if tones.is_empty() || rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
            let phase = rng.uniform(0.0, 2.0 * PI);
            if tones.iter().all(|t| (t.freq - freq).abs() >= spacing) {
                tones.push(Tone { freq, sign, phase });
            }
            attempts += 1;
            if attempts % 1000 == 0 {
                spacing /= 2.0;
            }
        }
        Ok(tones)
    }
}

/// Unit-variance sum of the positive-sign tones, one column per dimension.
pub fn multisine_generate(key: &MultiSineKey, n: usize, d: usize, bounds: &PolicyRateBounds) -> Result<WatermarkSequence> {
    if n < 2 {
        return Err(Error::InsufficientData { what: "multi-sine length", got: n, need: 2 });
    }
    let mut columns = Vec::with_capacity(d);
    for dim in 1..=d as u64 {
        let tones = key.tones_for(dim, bounds)?;
        let mut col: Vec<f64> =
            (0..n).map(|k| tones.iter().filter(|t| t.sign > 0.0).map(|t| (2.0 * PI * t.freq * k as f64 + t.phase).sin()).sum()).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let sd = population_std(&col);
        for v in &mut col {
            *v = (*v - mean) / sd;
        }
        columns.push(col);
    }
    Ok(WatermarkSequence { columns, key: key.secret(), bounds: *bounds })
}

/// One-sided Hann-windowed energy spectrum of a mean-removed channel.
fn energy_spectrum(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let w = Taper::Hann.window(n);
    let xw: Vec<f64> = x.iter().zip(&w).map(|(v, w)| (v - mean) * w).collect();
    fft::real_forward(&xw, n)[..n / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
}

/// Signed tone-energy score in `[-1, 1]`, maximized over the rate grid.
pub fn multisine_detect(glimpses: &GlimpseSequence, key: &MultiSineKey, bounds: &PolicyRateBounds, grid: &[f64]) -> Result<f64> {
    glimpses.validate()?;
    if grid.is_empty() {
        return Err(Error::config("detection grid is empty"));
    }
    let fg = glimpses.rate_hz;
    let [blo, bhi] = key.band_hz;
    if bhi >= fg / 2.0 {
        return Err(Error::BandEdge { low: blo, high: bhi, reason: "band reaches the glimpse Nyquist frequency" });
    }
    let g = glimpses.regularized();
    let n = g[0].len();
    if n < 16 {
        return Err(Error::InsufficientData { what: "glimpse sequence", got: n, need: 16 });
    }
    let nbins = n / 2 + 1;
    let df = fg / n as f64;
    let spectra: Vec<Vec<f64>> = g.iter().map(|c| energy_spectrum(c)).collect();
    let tones = (1..=g.len() as u64).map(|d| key.tones_for(d, bounds)).collect::<Result<Vec<_>>>()?;
    let band_bins = |k: usize| k as f64 * df >= blo && k as f64 * df <= bhi;

    let mut best = f64::NEG_INFINITY;
    let mut weight = vec![0.0; nbins];
    let mut touched = vec![false; nbins];
    for &rate in grid {
        let mut total = 0.0;
        for (spec, tones) in spectra.iter().zip(&tones) {
            weight.iter_mut().for_each(|w| *w = 0.0);
            touched.iter_mut().for_each(|t| *t = false);
            for t in tones {
                let centre = (t.freq * rate / df).round() as isize;
                for k in centre - 1..=centre + 1 {
                    if k >= 0 && (k as usize) < nbins {
                        weight[k as usize] += t.sign;
                        touched[k as usize] = true;
                    }
                }
            }
            let (mut num, mut den) = (0.0, 0.0);
            for k in 0..nbins {
                if touched[k] || band_bins(k) {
                    den += spec[k];
                    num += weight[k].clamp(-1.0, 1.0) * spec[k];
                }
            }
            total += if den > 0.0 { num / den } else { 0.0 };
        }
        best = best.max(total / spectra.len() as f64);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::linear_grid;
    use crate::sigproc::{gaussian_stream, Resampler};

    fn bounds() -> PolicyRateBounds {
        PolicyRateBounds::new(19.0, 21.0).unwrap()
    }

    fn key(tones: usize) -> MultiSineKey {
        MultiSineKey { seed: 8, band_hz: [1.2, 2.49], tones }
    }

    #[test]
    fn single_tone_peak() {
        let w = multisine_generate(&key(1), 4096, 1, &bounds()).unwrap();
        let f = key(1).tones_for(1, &bounds()).unwrap()[0].freq;
        let spec = energy_spectrum(&w.columns[0]);
        let k = spec.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((k as f64 / 4096.0 - f).abs() <= 1.0 / 4096.0);
    }

    #[test]
    fn unit_std_and_determinism() {
        let a = multisine_generate(&key(8), 3000, 2, &bounds()).unwrap();
        for c in &a.columns {
            assert!((population_std(c) - 1.0).abs() < 1e-9);
        }
        assert_eq!(a, multisine_generate(&key(8), 3000, 2, &bounds()).unwrap());
        let tones = key(8).tones_for(1, &bounds()).unwrap();
        let (lo, hi) = bounds().digital_band(&key(8).secret()).unwrap();
        assert!(tones.iter().all(|t| t.freq > lo && t.freq < hi));
        for (i, a) in tones.iter().enumerate() {
            assert!(tones[i + 1..].iter().all(|b| (a.freq - b.freq).abs() > (hi - lo) / 40.0));
        }
    }

    #[test]
    fn self_detection_and_noise() {
        let w = multisine_generate(&key(8), 1000, 2, &bounds()).unwrap();
        let r = Resampler::new(5, 1).unwrap();
        let cols = w.columns.iter().map(|c| r.process(c)).collect();
        let g = GlimpseSequence::uniform(cols, 100.0).unwrap();
        let grid = linear_grid(&bounds(), 41);
        let s = multisine_detect(&g, &key(8), &bounds(), &grid).unwrap();
        assert!(s >= 0.9, "{s}");

        let noise = GlimpseSequence::uniform(vec![gaussian_stream(1, 5000), gaussian_stream(2, 5000)], 100.0).unwrap();
        let z = multisine_detect(&noise, &key(8), &bounds(), &grid).unwrap();
        assert!(z < s - 0.3, "{z}");
    }
}
