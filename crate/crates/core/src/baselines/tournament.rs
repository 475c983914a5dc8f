//! Tournament watermark: candidate actions compete in knockout duels judged by
//! secret, context-seeded bell functions.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glimpse::GlimpseSequence;
use crate::sigproc::rng::{mix_seed, Xoshiro256};

pub const DEFAULT_LAYERS: u32 = 4;

/// Number of random keys forming the detector's null.
pub const NULL_KEYS: u64 = 100;

const NULL_TAG: u64 = 0x746e_6e75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TournamentKey {
    pub seed: u64,
    /// `L`; the tournament draws `2^L` candidates.
    pub layers: u32,
    pub center_range: [f64; 2],
    pub width_range: [f64; 2],
}

impl TournamentKey {
    pub fn new(seed: u64) -> Self {
        Self { seed, layers: DEFAULT_LAYERS, center_range: [-1.5, 1.5], width_range: [0.3, 1.0] }
    }

    pub fn candidates(&self) -> usize {
        1 << self.layers
    }

    pub fn validate(&self) -> Result<()> {
        let [wl, wh] = self.width_range;
        let [cl, ch] = self.center_range;
        if !(wl > 0.0 && wh >= wl && ch >= cl) || self.layers > 16 {
            return Err(Error::config("tournament key needs 0 < width_lo <= width_hi, center_lo <= center_hi, layers <= 16"));
        }
        Ok(())
    }

    /// `(center, width)` of each layer's g-function for a context value.
    pub fn g_params(&self, context: f64) -> Vec<(f64, f64)> {
        let q = (context * 1000.0).round() as i64 as u64;
        let mut rng = Xoshiro256::from_seed(mix_seed(self.seed, &[q]));
        (0..self.layers)
            .map(|_| {
                let c = rng.uniform(self.center_range[0], self.center_range[1]);
                let w = rng.uniform(self.width_range[0], self.width_range[1]);
                (c, w)
            })
            .collect()
    }
}

fn h(a: &[f64]) -> f64 {
    a.iter().sum()
}

fn bell(x: f64, (c, w): (f64, f64)) -> f64 {
    (-(x - c) * (x - c) / (2.0 * w * w)).exp()
}

/// Winner of a `2^L`-candidate tournament drawn from `N(mean, scale^2)`.
pub fn tournament_act(key: &TournamentKey, mean: &[f64], scale: &[f64], context: f64, rng: &mut Xoshiro256) -> Vec<f64> {
    let d = mean.len();
    let mut cands: Vec<Vec<f64>> = (0..key.candidates())
        .map(|_| {
            let mut z = Vec::with_capacity(d);
            while z.len() < d {
                let (a, b) = rng.normal_pair();
                z.push(a);
                if z.len() < d {
                    z.push(b);
                }
            }
            mean.iter().zip(scale).zip(z).map(|((m, s), z)| m + s * z).collect()
        })
        .collect();
    for p in key.g_params(context) {
        cands = cands
            .chunks(2)
            .map(|pair| if pair.len() == 2 && bell(h(&pair[1]), p) > bell(h(&pair[0]), p) { pair[1].clone() } else { pair[0].clone() })
            .collect();
    }
    cands.swap_remove(0)
}

/// How the detector recovers an action from glimpses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ActionProxy {
    /// Glimpses are the executed actions; context is the previous glimpse norm.
    Direct,
    /// Action is the first difference of glimpses times the glimpse rate;
    /// context is the current glimpse norm.
    #[default]
    Difference,
}

fn mean_g(key: &TournamentKey, pairs: &[(f64, f64)]) -> f64 {
    let total: f64 = pairs
        .iter()
        .map(|&(ctx, hv)| {
            let ps = key.g_params(ctx);
            ps.iter().map(|&p| bell(hv, p)).sum::<f64>() / ps.len().max(1) as f64
        })
        .sum();
    total / pairs.len() as f64
}

/// Z-score of the mean g-value under `key` against [`NULL_KEYS`] random keys.
pub fn tournament_detect(glimpses: &GlimpseSequence, key: &TournamentKey, proxy: ActionProxy) -> Result<f64> {
    glimpses.validate()?;
    key.validate()?;
    let g = glimpses.regularized();
    let n = g[0].len();
    if n < 2 {
        return Err(Error::InsufficientData { what: "glimpse sequence", got: n, need: 2 });
    }
    let norm = |i: usize| g.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt();
    let fg = glimpses.rate_hz;
    let pairs: Vec<(f64, f64)> = match proxy {
        ActionProxy::Direct => (1..n).map(|i| (norm(i - 1), g.iter().map(|c| c[i]).sum())).collect(),
        ActionProxy::Difference => (0..n - 1).map(|i| (norm(i), g.iter().map(|c| (c[i + 1] - c[i]) * fg).sum())).collect(),
    };
    let stat = mean_g(key, &pairs);
    let null: Vec<f64> =
        (0..NULL_KEYS).map(|j| mean_g(&TournamentKey { seed: mix_seed(key.seed, &[NULL_TAG, j]), ..*key }, &pairs)).collect();
    let mu = null.iter().sum::<f64>() / null.len() as f64;
    let sd = (null.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (null.len() - 1) as f64).sqrt();
    Ok(if sd > 0.0 { (stat - mu) / sd } else { 0.0 })
}
