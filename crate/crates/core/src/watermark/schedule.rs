use std::f64::consts::PI;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the exploration scale over policy steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleMode {
    Constant {
        value: f64,
    },
    /// `mean + amplitude * sin(2 pi k / period_steps)`.
    Sinusoidal {
        mean: f64,
        amplitude: f64,
        period_steps: f64,
    },
    /// `before` for `k < at_step`, `after` from then on.
    Step {
        before: f64,
        after: f64,
        at_step: usize,
    },
    /// Explicit values; the last one is held past the end.
    Custom {
        values: Vec<f64>,
    },
}

/// Exploration scale schedule, shared by every action dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExplorationScaleSchedule {
    pub mode: ScheduleMode,
    /// Trailing moving-average window in steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<usize>,
}

impl ExplorationScaleSchedule {
    pub fn constant(value: f64) -> Self {
        Self { mode: ScheduleMode::Constant { value }, smoothing: None }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match &self.mode {
            ScheduleMode::Constant { value } => *value > 0.0,
            ScheduleMode::Sinusoidal { mean, amplitude, period_steps } => *mean - amplitude.abs() > 0.0 && *period_steps > 0.0,
            ScheduleMode::Step { before, after, .. } => *before > 0.0 && *after > 0.0,
            ScheduleMode::Custom { values } => !values.is_empty() && values.iter().all(|v| *v > 0.0),
        };
        if !ok {
            return Err(Error::config("exploration scale must stay strictly positive"));
        }
        if self.smoothing == Some(0) {
            return Err(Error::config("smoothing window must be at least 1"));
        }
        Ok(())
    }

    /// Raw (unsmoothed) scale at step `k`.
    pub fn raw(&self, k: usize) -> f64 {
        match &self.mode {
            ScheduleMode::Constant { value } => *value,
            ScheduleMode::Sinusoidal { mean, amplitude, period_steps } => mean + amplitude * (2.0 * PI * k as f64 / period_steps).sin(),
            ScheduleMode::Step { before, after, at_step } => {
                if k < *at_step {
                    *before
                } else {
                    *after
                }
            }
            ScheduleMode::Custom { values } => values[k.min(values.len() - 1)],
        }
    }

    /// Scale vectors for `n` steps and `d` dimensions, smoothing applied.
    pub fn values(&self, n: usize, d: usize) -> Vec<Vec<f64>> {
        let raw: Vec<Vec<f64>> = (0..n).map(|k| vec![self.raw(k); d]).collect();
        smooth_scale(&raw, self.smoothing.unwrap_or(1))
    }
}

/// Trailing moving average over the last `m` scale vectors (fewer at the start).
pub fn smooth_scale(values: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
    let m = m.max(1);
    if m == 1 {
        return values.to_vec();
    }
    let d = values.first().map_or(0, Vec::len);
    let mut sum = vec![0.0; d];
    let mut out = Vec::with_capacity(values.len());
    for (k, v) in values.iter().enumerate() {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        if k >= m {
            for (s, x) in sum.iter_mut().zip(&values[k - m]) {
                *s -= x;
            }
        }
        let count = (k + 1).min(m) as f64;
        out.push(sum.iter().map(|s| s / count).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_constant() {
        let v: Vec<Vec<f64>> = (0..20).map(|k| vec![k as f64 + 1.0, 2.0]).collect();
        assert_eq!(smooth_scale(&v, 1), v);
        let c = vec![vec![0.3, 0.3]; 50];
        for row in smooth_scale(&c, 7) {
            for x in row {
                assert!((x - 0.3).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn step_midpoint() {
        let s = ExplorationScaleSchedule { mode: ScheduleMode::Step { before: 1.0, after: 2.0, at_step: 100 }, smoothing: Some(10) };
        let v = s.values(200, 1);
        assert!((v[104][0] - 1.5).abs() < 1e-12);
        assert_eq!(v[50][0], 1.0);
        assert!((v[150][0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(ExplorationScaleSchedule::constant(0.0).validate().is_err());
        let s =
            ExplorationScaleSchedule { mode: ScheduleMode::Sinusoidal { mean: 1.0, amplitude: 0.5, period_steps: 40.0 }, smoothing: None };
        assert!(s.validate().is_ok());
        assert!((0..100).all(|k| s.raw(k) > 0.0));
        let bad = ExplorationScaleSchedule { mode: ScheduleMode::Custom { values: vec![] }, smoothing: None };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_shape() {
        let s: ExplorationScaleSchedule = serde_json::from_str(r#"{"mode": {"kind": "constant", "value": 0.5}, "smoothing": 3}"#).unwrap();
        assert_eq!(s.raw(9), 0.5);
        assert_eq!(s.smoothing, Some(3));
    }
}
