use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::attack::{ActionAttack, Attack};
use super::plant::LinearPlant;
use super::task::TaskSpec;
use crate::baselines::tournament::{tournament_act, TournamentKey};
use crate::error::{Error, Result};
use crate::sigproc::rng::{mix_seed, GaussianStream, Xoshiro256};
use crate::watermark::{derive_dim_seed, inject_action, ExplorationScaleSchedule, PolicyRateBounds};

/// Gaussian policy around the task's mean rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GaussianPolicy {
    pub rate_hz: f64,
    pub schedule: ExplorationScaleSchedule,
    /// Hard clip applied to each action component last.
    #[serde(default)]
    pub saturation: Option<f64>,
}

/// Where the exploration term comes from.
#[derive(Debug, Clone, Copy)]
pub enum NoiseSource<'a> {
    /// No exploration: the mean rule acts alone.
    Silent,
    /// Fresh white Gaussian noise from `seed`.
    White { seed: u64 },
    /// Pre-generated per-dimension columns (watermark or baseline sequence).
    Sequence(&'a [Vec<f64>]),
    /// Tournament sampling with candidates drawn from `seed`.
    Tournament { key: &'a TournamentKey, seed: u64 },
}

/// Everything recorded during one episode. Never handed to a detector.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    /// Executed actions per dimension, one entry per policy step.
    pub actions: Vec<Vec<f64>>,
    /// Mean-rule output per dimension, one entry per policy step.
    pub means: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    /// Plant outputs per channel at every plant step, initial state included.
    pub outputs: Vec<Vec<f64>>,
    /// Plant state per component at every plant step, initial state included.
    pub states: Vec<Vec<f64>>,
    pub dt: f64,
}

impl EpisodeTrace {
    /// Trace holding only plant outputs.
    pub fn from_outputs(outputs: Vec<Vec<f64>>, dt: f64) -> Self {
        Self { actions: vec![], means: vec![], rewards: vec![], outputs, states: vec![], dt }
    }

    pub fn duration(&self) -> f64 {
        (self.outputs[0].len() - 1) as f64 * self.dt
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Plant steps per policy step; `1/f_pi` must be an integer multiple (>= 10) of `dt`.
pub fn substeps(policy_rate_hz: f64, dt: f64) -> Result<usize> {
    let ratio = 1.0 / (policy_rate_hz * dt);
    let r = ratio.round();
    if (ratio - r).abs() > 1e-9 * ratio.max(1.0) || r < 10.0 {
        return Err(Error::config(format!("plant step {dt}s must divide the policy period 1/{policy_rate_hz}s at least 10 times")));
    }
    Ok(r as usize)
}

const RESET_TAG: u64 = 11;
const TASK_TAG: u64 = 12;
const PROCESS_TAG: u64 = 13;
const ATTACK_SEED_TAG: u64 = 14;

/// Runs `steps` policy steps with zero-order hold between them.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    policy: &GaussianPolicy,
    plant: &LinearPlant,
    task: &TaskSpec,
    noise: NoiseSource<'_>,
    attack: Option<&Attack>,
    bounds: &PolicyRateBounds,
    steps: usize,
    seed: u64,
) -> Result<EpisodeTrace> {
    policy.schedule.validate()?;
    if !bounds.contains(policy.rate_hz) {
        return Err(Error::config(format!("policy rate {} Hz lies outside the bounds [{}, {}]", policy.rate_hz, bounds.f_lb, bounds.f_ub)));
    }
    let sub = substeps(policy.rate_hz, plant.dt)?;
    let d = task.action_dims();
    if plant.inputs() != d {
        return Err(Error::config("plant input count differs from the task's action dimension"));
    }
    if let NoiseSource::Sequence(cols) = noise {
        if cols.len() < d || cols.iter().any(|c| c.len() < steps) {
            return Err(Error::config("noise sequence is shorter than the episode"));
        }
    }

    let mut reset_rng = Xoshiro256::from_seed(mix_seed(seed, &[RESET_TAG]));
    let mut task_rng = Xoshiro256::from_seed(mix_seed(seed, &[TASK_TAG]));
    let mut process = GaussianStream::new(mix_seed(seed, &[PROCESS_TAG]));
    let mut white: Vec<GaussianStream> = match noise {
        NoiseSource::White { seed } => (1..=d as u64).map(|k| GaussianStream::new(derive_dim_seed(seed, k))).collect(),
        _ => Vec::new(),
    };
    let mut tour_rng = match noise {
        NoiseSource::Tournament { seed, .. } => Some(Xoshiro256::from_seed(seed)),
        _ => None,
    };
    let mut atk = ActionAttack::prepare(attack, policy.rate_hz, bounds, steps, d, mix_seed(seed, &[ATTACK_SEED_TAG]))?;
    let scales = policy.schedule.values(steps, d);

    let (mut x, mut st) = task.reset(&mut reset_rng);
    let n_out = plant.outputs();
    let mut y = vec![0.0; n_out];
    let mut scratch = vec![0.0; plant.states()];
    let mut outputs: Vec<Vec<f64>> = vec![Vec::with_capacity(steps * sub + 1); n_out];
    let mut states: Vec<Vec<f64>> = vec![Vec::with_capacity(steps * sub + 1); plant.states()];
    let mut actions: Vec<Vec<f64>> = vec![Vec::with_capacity(steps); d];
    let mut means: Vec<Vec<f64>> = vec![Vec::with_capacity(steps); d];
    let mut rewards = Vec::with_capacity(steps);

    let record = |x: &[f64], y: &mut [f64], outputs: &mut Vec<Vec<f64>>, states: &mut Vec<Vec<f64>>| {
        plant.output_into(x, y);
        for (o, v) in outputs.iter_mut().zip(y.iter()) {
            o.push(*v);
        }
        for (s, v) in states.iter_mut().zip(x) {
            s.push(*v);
        }
    };
    record(&x, &mut y, &mut outputs, &mut states);

    for k in 0..steps {
        let mean = task.mean_action(&x, &st);
        let scale = &scales[k];
        let mut a = match noise {
            NoiseSource::Silent => inject_action(&mean, scale, &vec![0.0; d], policy.saturation),
            NoiseSource::White { .. } => {
                let w: Vec<f64> = white.iter_mut().map(GaussianStream::next_sample).collect();
                inject_action(&mean, scale, &w, policy.saturation)
            }
            NoiseSource::Sequence(cols) => {
                let w: Vec<f64> = cols.iter().take(d).map(|c| c[k]).collect();
                inject_action(&mean, scale, &w, policy.saturation)
            }
            NoiseSource::Tournament { key, .. } => {
                plant.output_into(&x, &mut y);
                let context = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rng = tour_rng.as_mut().expect("tournament rng");
                let a = tournament_act(key, &mean, scale, context, rng);
                inject_action(&a, &vec![0.0; d], &vec![0.0; d], policy.saturation)
            }
        };
        atk.apply(k, &mut a, scale);

        for _ in 0..sub {
            plant.step(&mut x, &a, &mut scratch);
            if plant.process_noise_std > 0.0 {
                for v in x.iter_mut() {
                    *v += plant.process_noise_std * process.next_sample();
                }
            }
            record(&x, &mut y, &mut outputs, &mut states);
        }
        rewards.push(task.reward(&x, &a, &mut st, &mut task_rng));
        for dd in 0..d {
            actions[dd].push(a[dd]);
            means[dd].push(mean[dd]);
        }
    }

    Ok(EpisodeTrace { actions, means, rewards, outputs, states, dt: plant.dt })
}
