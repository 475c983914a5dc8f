//! Coherency detectors: the frequency-grid search and its offset-handling
//! variant built on GCC-PHAT.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glimpse::GlimpseSequence;
use crate::sigproc::gcc::{argmax_first, gcc_phat, GccCurve};
use crate::sigproc::resample::{best_rational, Resampler, DEFAULT_MAX_DENOMINATOR};
use crate::sigproc::spectral::{coherency, Welch};
use crate::watermark::{generate_watermark, PolicyRateBounds, SecretKey};

/// Default number of policy-rate hypotheses.
pub const DEFAULT_GRID_POINTS: usize = 41;

/// Welch window used when none is configured.
pub fn default_win_len(glimpse_len: usize) -> usize {
    if glimpse_len < 10_000 {
        64
    } else {
        256
    }
}

/// `points` evenly spaced rates over `[f_lb, f_ub]`.
pub fn linear_grid(bounds: &PolicyRateBounds, points: usize) -> Vec<f64> {
    if points <= 1 || bounds.f_lb == bounds.f_ub {
        return vec![0.5 * (bounds.f_lb + bounds.f_ub)];
    }
    let step = (bounds.f_ub - bounds.f_lb) / (points - 1) as f64;
    (0..points).map(|i| if i + 1 == points { bounds.f_ub } else { bounds.f_lb + step * i as f64 }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    /// Candidate policy rates in Hz.
    pub grid_hz: Vec<f64>,
    /// Welch segment length; chosen from the glimpse length when absent.
    #[serde(default)]
    pub win_len: Option<usize>,
    #[serde(default = "default_overlap")]
    pub overlap: f64,
    /// Largest start offset searched by the offset variant, in seconds.
    #[serde(default)]
    pub max_offset_s: Option<f64>,
    #[serde(default = "default_max_den")]
    pub max_denominator: u64,
}

fn default_overlap() -> f64 {
    0.5
}

fn default_max_den() -> u64 {
    DEFAULT_MAX_DENOMINATOR
}

impl DetectionConfig {
    pub fn new(bounds: &PolicyRateBounds, grid_points: usize) -> Self {
        Self {
            grid_hz: linear_grid(bounds, grid_points),
            win_len: None,
            overlap: 0.5,
            max_offset_s: None,
            max_denominator: DEFAULT_MAX_DENOMINATOR,
        }
    }

    pub fn with_max_offset(mut self, seconds: f64) -> Self {
        self.max_offset_s = Some(seconds);
        self
    }

    pub fn validate(&self, bounds: &PolicyRateBounds) -> Result<()> {
        if self.grid_hz.is_empty() {
            return Err(Error::config("detection grid is empty"));
        }
        let tol = 1e-9 * bounds.f_ub;
        if let Some(s) = self.grid_hz.iter().find(|&&s| !(s >= bounds.f_lb - tol && s <= bounds.f_ub + tol)) {
            return Err(Error::config(format!("grid rate {s} Hz lies outside the policy rate bounds [{}, {}]", bounds.f_lb, bounds.f_ub)));
        }
        if let Some(m) = self.max_offset_s {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::config(format!("max_offset_s must be non-negative, got {m}")));
            }
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::config(format!("overlap must lie in [0, 1), got {}", self.overlap)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisScore {
    pub rate_hz: f64,
    pub score: f64,
    pub per_dimension: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub score: f64,
    pub best_rate_hz: f64,
    pub per_dimension_scores: Vec<f64>,
    /// Consensus start offset in glimpse samples (offset variant only).
    pub estimated_offset: Option<usize>,
    pub hypotheses: Vec<HypothesisScore>,
}

impl DetectionReport {
    fn from_hypotheses(hypotheses: Vec<HypothesisScore>) -> Self {
        let scores: Vec<f64> = hypotheses.iter().map(|h| h.score).collect();
        let best = hypotheses[argmax_first(&scores)].clone();
        Self {
            score: best.score,
            best_rate_hz: best.rate_hz,
            per_dimension_scores: best.per_dimension,
            estimated_offset: best.offset,
            hypotheses,
        }
    }
}

/// Glimpse data and parameters shared by every hypothesis.
struct Prepared {
    g: Vec<Vec<f64>>,
    fg: f64,
    welch: Welch,
    band: (f64, f64),
}

fn prepare(glimpses: &GlimpseSequence, key: &SecretKey, bounds: &PolicyRateBounds, config: &DetectionConfig) -> Result<Prepared> {
    glimpses.validate()?;
    key.validate()?;
    bounds.validate()?;
    config.validate(bounds)?;
    let fg = glimpses.rate_hz;
    let band = key.band();
    if band.1 >= fg / 2.0 {
        return Err(Error::BandEdge { low: band.0, high: band.1, reason: "band reaches the glimpse Nyquist frequency" });
    }
    let g = glimpses.regularized();
    let n = g[0].len();
    let win_len = config.win_len.unwrap_or_else(|| default_win_len(n));
    if n < win_len {
        return Err(Error::InsufficientData { what: "glimpse sequence", got: n, need: win_len });
    }
    Ok(Prepared { g, fg, welch: Welch::new(fg, win_len).with_overlap(config.overlap), band })
}

impl Prepared {
    fn len(&self) -> usize {
        self.g[0].len()
    }

    fn resampler(&self, rate: f64, max_den: u64) -> Result<std::sync::Arc<Resampler>> {
        let (p, q) = best_rational(self.fg / rate, max_den)?;
        Resampler::cached(p, q)
    }

    /// Mean band coherency of each glimpse channel against its reference.
    fn score(&self, reference: &[&[f64]]) -> Result<(f64, Vec<f64>)> {
        let per_dim =
            self.g.iter().zip(reference).map(|(g, w)| coherency(g, w, &self.welch)?.band_mean(self.band)).collect::<Result<Vec<f64>>>()?;
        let score = per_dim.iter().sum::<f64>() / per_dim.len() as f64;
        Ok((score, per_dim))
    }
}

fn max_rate(config: &DetectionConfig) -> f64 {
    config.grid_hz.iter().copied().fold(f64::MIN, f64::max)
}

/// Grid-search coherency detector.
///
/// For each candidate rate `s` the watermark is regenerated, resampled by
/// `f_g / s`, truncated to the glimpse length, and compared channel by channel.
/// The score is the best hypothesis' dimension-averaged band-mean |C|.
pub fn detect(glimpses: &GlimpseSequence, key: &SecretKey, bounds: &PolicyRateBounds, config: &DetectionConfig) -> Result<DetectionReport> {
    let prep = prepare(glimpses, key, bounds, config)?;
    let n = prep.len();
    let base_len = (n as f64 * max_rate(config) / prep.fg).ceil() as usize + 2 * prep.welch.win_len;
    let w = generate_watermark(key, base_len, glimpses.dims(), bounds)?;

    let hypotheses = config
        .grid_hz
        .iter()
        .map(|&rate| {
            let r = prep.resampler(rate, config.max_denominator)?;
            let refs: Vec<Vec<f64>> = w.columns.iter().map(|c| r.process_prefix(c, n)).collect();
            if refs[0].len() < n {
                return Err(Error::Invariant(format!("regenerated watermark too short at {rate} Hz")));
            }
            let views: Vec<&[f64]> = refs.iter().map(Vec::as_slice).collect();
            let (score, per_dimension) = prep.score(&views)?;
            Ok(HypothesisScore { rate_hz: rate, score, per_dimension, offset: None })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectionReport::from_hypotheses(hypotheses))
}

/// Offset-handling detector.
///
/// Per hypothesis, the regenerated watermark is extended by the maximum offset,
/// per-channel band-limited GCC-PHAT curves are summed, and the argmax over
/// non-negative lags is taken as the consensus start offset. The watermark is
/// aligned at that offset and scored as in [`detect`].
pub fn detect_with_offset(
    glimpses: &GlimpseSequence,
    key: &SecretKey,
    bounds: &PolicyRateBounds,
    config: &DetectionConfig,
) -> Result<DetectionReport> {
    let max_offset = config.max_offset_s.ok_or_else(|| Error::config("offset handling needs max_offset_s"))?;
    let prep = prepare(glimpses, key, bounds, config)?;
    let n = prep.len();
    let max_lag = (max_offset * prep.fg).round() as usize;
    if max_lag >= n {
        return Err(Error::InsufficientData { what: "glimpse sequence for the offset search", got: n, need: max_lag + 1 });
    }
    let span = n as f64 / prep.fg + max_offset;
    let base_len = (span * max_rate(config)).ceil() as usize + 2 * prep.welch.win_len;
    let w = generate_watermark(key, base_len, glimpses.dims(), bounds)?;
    let need = n + max_lag;

    let hypotheses = config
        .grid_hz
        .iter()
        .map(|&rate| {
            let r = prep.resampler(rate, config.max_denominator)?;
            let refs: Vec<Vec<f64>> = w.columns.iter().map(|c| r.process_prefix(c, need)).collect();
            if refs[0].len() < need {
                return Err(Error::Invariant(format!("regenerated watermark too short at {rate} Hz")));
            }
            let mut agg: Option<GccCurve> = None;
            for (g, wr) in prep.g.iter().zip(&refs) {
                let c = gcc_phat(g, wr, prep.fg, prep.band, max_lag)?;
                match agg.as_mut() {
                    Some(a) => a.add_assign(&c),
                    None => agg = Some(c),
                }
            }
            let agg = agg.expect("at least one channel");
            let tau = argmax_first(&agg.values[max_lag..]);
            let views: Vec<&[f64]> = refs.iter().map(|c| &c[tau..tau + n]).collect();
            let (score, per_dimension) = prep.score(&views)?;
            Ok(HypothesisScore { rate_hz: rate, score, per_dimension, offset: Some(tau) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectionReport::from_hypotheses(hypotheses))
}
