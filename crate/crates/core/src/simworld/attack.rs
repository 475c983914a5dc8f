//! Adversaries that alter the executed action stream to erase a watermark.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigproc::filter::{design_bandstop, FilterState};
use crate::sigproc::rng::{mix_seed, GaussianStream};
use crate::watermark::{derive_dim_seed, generate_watermark, PolicyRateBounds, SecretKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Attack {
    /// `clip(a + eta)` with `eta ~ N(0, sigma^2)` per dimension.
    Additive {
        sigma: f64,
        #[serde(default)]
        clip: Option<f64>,
    },
    /// Causal Butterworth band-stop on each action dimension.
    BandStop { band_hz: [f64; 2], order: usize },
    /// Adds `gain * scale_k * J_k` with `J` colored noise from a jamming key.
    Jam {
        key: SecretKey,
        #[serde(default = "unit_gain")]
        gain: f64,
    },
}

fn unit_gain() -> f64 {
    1.0
}

const ATTACK_TAG: u64 = 0x0061_6476;

/// `clip(a + N(0, sigma^2))` per element; `actions` are per-dimension columns.
pub fn attack_additive(actions: &[Vec<f64>], sigma: f64, clip: Option<f64>, seed: u64) -> Vec<Vec<f64>> {
    actions
        .iter()
        .enumerate()
        .map(|(d, col)| {
            let mut g = GaussianStream::new(derive_dim_seed(mix_seed(seed, &[ATTACK_TAG]), d as u64 + 1));
            col.iter().map(|&a| clip_to(a + sigma * g.next_sample(), clip)).collect()
        })
        .collect()
}

fn clip_to(a: f64, clip: Option<f64>) -> f64 {
    match clip {
        Some(l) => a.clamp(-l, l),
        None => a,
    }
}

/// Band-stop over `band` in cycles per step, applied to each column.
pub fn attack_bandstop(actions: &[Vec<f64>], band: (f64, f64), order: usize) -> Result<Vec<Vec<f64>>> {
    let f = design_bandstop(order, band.0, band.1)?;
    Ok(actions.iter().map(|c| f.apply(c)).collect())
}

/// `actions + gain * scale (.) J`, with `scales[k]` the scale vector at step `k`
/// and `jam` per-dimension columns.
pub fn attack_jam(actions: &[Vec<f64>], scales: &[Vec<f64>], jam: &[Vec<f64>], gain: f64) -> Vec<Vec<f64>> {
    actions.iter().enumerate().map(|(d, col)| col.iter().enumerate().map(|(k, &a)| a + gain * scales[k][d] * jam[d][k]).collect()).collect()
}

/// Step-by-step form of an [`Attack`] used inside an episode.
pub(crate) enum ActionAttack {
    None,
    Additive { sigma: f64, clip: Option<f64>, noise: Vec<GaussianStream> },
    BandStop(Vec<FilterState>),
    Jam { jam: Vec<Vec<f64>>, gain: f64 },
}

impl ActionAttack {
    pub(crate) fn prepare(
        attack: Option<&Attack>,
        policy_rate_hz: f64,
        bounds: &PolicyRateBounds,
        steps: usize,
        dims: usize,
        seed: u64,
    ) -> Result<Self> {
        Ok(match attack {
            None => ActionAttack::None,
            Some(Attack::Additive { sigma, clip }) => {
                if *sigma < 0.0 {
                    return Err(Error::config("additive attack strength must be non-negative"));
                }
                let base = mix_seed(seed, &[ATTACK_TAG]);
                let noise = (1..=dims as u64).map(|d| GaussianStream::new(derive_dim_seed(base, d))).collect();
                ActionAttack::Additive { sigma: *sigma, clip: *clip, noise }
            }
            Some(Attack::BandStop { band_hz, order }) => {
                let f = design_bandstop(*order, band_hz[0] / policy_rate_hz, band_hz[1] / policy_rate_hz)?;
                ActionAttack::BandStop((0..dims).map(|_| f.state()).collect())
            }
            Some(Attack::Jam { key, gain }) => {
                let w = generate_watermark(key, steps.max(41), dims, bounds)?;
                ActionAttack::Jam { jam: w.columns, gain: *gain }
            }
        })
    }

    pub(crate) fn apply(&mut self, k: usize, a: &mut [f64], scale: &[f64]) {
        match self {
            ActionAttack::None => {}
            ActionAttack::Additive { sigma, clip, noise } => {
                for (v, g) in a.iter_mut().zip(noise.iter_mut()) {
                    *v = clip_to(*v + *sigma * g.next_sample(), *clip);
                }
            }
            ActionAttack::BandStop(states) => {
                for (v, st) in a.iter_mut().zip(states.iter_mut()) {
                    *v = st.process(*v);
                }
            }
            ActionAttack::Jam { jam, gain } => {
                for (d, v) in a.iter_mut().enumerate() {
                    *v += *gain * scale[d] * jam[d][k];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigproc::gaussian_stream;
    use crate::watermark::population_std;

    #[test]
    fn additive() {
        let a = vec![gaussian_stream(1, 10_000)];
        assert_eq!(attack_additive(&a, 0.0, None, 3), a);
        let b = attack_additive(&a, 2.0, None, 3);
        let diff: Vec<f64> = b[0].iter().zip(&a[0]).map(|(x, y)| x - y).collect();
        assert!((population_std(&diff) / 2.0 - 1.0).abs() < 0.05);
        assert_eq!(attack_additive(&[vec![1.5]], 0.0, Some(1.0), 0), vec![vec![1.0]]);
    }

    #[test]
    fn streaming_matches_batch() {
        let a = vec![gaussian_stream(4, 500), gaussian_stream(5, 500)];
        let bounds = PolicyRateBounds::new(19.0, 21.0).unwrap();
        let atk = Attack::BandStop { band_hz: [1.2, 2.49], order: 3 };
        let mut st = ActionAttack::prepare(Some(&atk), 20.0, &bounds, 500, 2, 0).unwrap();
        let batch = attack_bandstop(&a, (1.2 / 20.0, 2.49 / 20.0), 3).unwrap();
        for k in 0..500 {
            let mut v = [a[0][k], a[1][k]];
            st.apply(k, &mut v, &[1.0, 1.0]);
            assert_eq!(v, [batch[0][k], batch[1][k]]);
        }
    }
}
