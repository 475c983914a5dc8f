use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::metrics::{auc_ci, mean_difference_ci, roc_auc, Interval, RocCurve, Summary};
use crate::baselines::correlation::{DEFAULT_CUTOFF_HZ, DEFAULT_MAX_LAG_S};
use crate::baselines::multisine::DEFAULT_TONES;
use crate::baselines::tournament::DEFAULT_LAYERS;
use crate::baselines::{
    correlation_detect, correlation_generate, multisine_detect, multisine_generate, tournament_detect, ActionProxy, CorrelationKey,
    MultiSineKey, TournamentKey,
};
use crate::detect::{detect, detect_with_offset, linear_grid, DetectionConfig, DEFAULT_GRID_POINTS};
use crate::error::{Error, Result};
use crate::glimpse::{GlimpseSequence, Provenance};
use crate::sigproc::rng::mix_seed;
use crate::simworld::{EpisodeTrace, NoiseSource, Scenario};
use crate::watermark::{generate_watermark, PolicyRateBounds, SecretKey};

fn default_tones() -> usize {
    DEFAULT_TONES
}
fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF_HZ
}
fn default_max_lag() -> f64 {
    DEFAULT_MAX_LAG_S
}
fn default_layers() -> u32 {
    DEFAULT_LAYERS
}

/// Watermarking scheme applied to the watermarked arm, with its detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    Conoco,
    Multisine {
        #[serde(default = "default_tones")]
        tones: usize,
    },
    Correlation {
        #[serde(default = "default_cutoff")]
        cutoff_hz: f64,
        #[serde(default = "default_max_lag")]
        max_lag_s: f64,
    },
    Tournament {
        #[serde(default = "default_layers")]
        layers: u32,
        #[serde(default)]
        proxy: ActionProxy,
    },
    /// Both arms explore with white noise; scored by the coherency detector.
    None,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Conoco => "conoco",
            Strategy::Multisine { .. } => "multisine",
            Strategy::Correlation { .. } => "correlation",
            Strategy::Tournament { .. } => "tournament",
            Strategy::None => "none",
        }
    }

    fn tournament_key(&self, key: &SecretKey) -> TournamentKey {
        match *self {
            Strategy::Tournament { layers, .. } => TournamentKey { layers, ..TournamentKey::new(key.seed) },
            _ => TournamentKey::new(key.seed),
        }
    }

    /// Runs one episode of the watermarked arm.
    pub fn run_watermarked(&self, scenario: &Scenario, key: &SecretKey, seed: u64) -> Result<EpisodeTrace> {
        let d = scenario.task.action_dims();
        let n = scenario.steps;
        let plant = scenario.plant()?;
        let run = |noise: NoiseSource<'_>| {
            crate::simworld::run_episode(
                &scenario.policy,
                &plant,
                &scenario.task,
                noise,
                scenario.attack.as_ref(),
                &scenario.bounds,
                n,
                seed,
            )
        };
        if scenario.mean_only {
            return run(NoiseSource::Silent);
        }
        match *self {
            Strategy::Conoco => {
                let w = generate_watermark(key, n.max(41), d, &scenario.bounds)?;
                run(NoiseSource::Sequence(&w.columns))
            }
            Strategy::Multisine { tones } => {
                let w = multisine_generate(&MultiSineKey::new(key, tones), n, d, &scenario.bounds)?;
                run(NoiseSource::Sequence(&w.columns))
            }
            Strategy::Correlation { cutoff_hz, max_lag_s } => {
                let k = CorrelationKey { seed: key.seed, cutoff_hz, max_lag_s };
                run(NoiseSource::Sequence(&correlation_generate(&k, n, d)))
            }
            Strategy::Tournament { .. } => {
                let tk = self.tournament_key(key);
                run(NoiseSource::Tournament { key: &tk, seed: mix_seed(seed, &[TOURNAMENT_TAG]) })
            }
            Strategy::None => run(NoiseSource::White { seed: mix_seed(seed, &[WHITE_TAG, 1]) }),
        }
    }

    /// Detection score of `glimpses` under `key`.
    pub fn score(
        &self,
        glimpses: &GlimpseSequence,
        key: &SecretKey,
        bounds: &PolicyRateBounds,
        detector: &DetectorSettings,
    ) -> Result<(f64, Option<usize>)> {
        let grid = linear_grid(bounds, detector.grid_points);
        match *self {
            Strategy::Conoco | Strategy::None => {
                let mut cfg = DetectionConfig::new(bounds, detector.grid_points);
                cfg.win_len = detector.win_len;
                if detector.offset_handling {
                    let n = glimpses.len();
                    let max = detector.max_offset_s.unwrap_or(0.9 * (n.saturating_sub(1)) as f64 / glimpses.rate_hz);
                    let r = detect_with_offset(glimpses, key, bounds, &cfg.with_max_offset(max))?;
                    Ok((r.score, r.estimated_offset))
                } else {
                    Ok((detect(glimpses, key, bounds, &cfg)?.score, None))
                }
            }
            Strategy::Multisine { tones } => Ok((multisine_detect(glimpses, &MultiSineKey::new(key, tones), bounds, &grid)?, None)),
            Strategy::Correlation { cutoff_hz, max_lag_s } => {
                let k = CorrelationKey { seed: key.seed, cutoff_hz, max_lag_s };
                Ok((correlation_detect(glimpses, &k, &grid)?, None))
            }
            Strategy::Tournament { proxy, .. } => Ok((tournament_detect(glimpses, &self.tournament_key(key), proxy)?, None)),
        }
    }
}

/// Detector options shared by every run of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DetectorSettings {
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub win_len: Option<usize>,
    /// Use the offset-searching coherency detector.
    #[serde(default)]
    pub offset_handling: bool,
    /// Largest offset searched; 90% of the glimpse duration when absent.
    #[serde(default)]
    pub max_offset_s: Option<f64>,
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self { grid_points: DEFAULT_GRID_POINTS, win_len: None, offset_handling: false, max_offset_s: None }
    }
}

/// Everything needed to run a batch of paired replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ReplicationPlan {
    pub scenario: Scenario,
    pub strategy: Strategy,
    pub key: SecretKey,
    pub n: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub detector: DetectorSettings,
    /// Also score every run with an independently seeded wrong key.
    #[serde(default)]
    pub wrong_key: bool,
}

const SENSOR_TAG: u64 = 0x73656e;
const WRONG_TAG: u64 = 0x77726f;
const WHITE_TAG: u64 = 0x776e;
const TOURNAMENT_TAG: u64 = 0x746f;

/// Seeds used by replication `i` of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub environment: u64,
    pub sensor: u64,
    pub key: u64,
    pub wrong_key: u64,
}

impl ReplicationPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::config(format!("at least 2 replications are required, got {}", self.n)));
        }
        if self.detector.grid_points == 0 {
            return Err(Error::config("detector grid needs at least one point"));
        }
        self.scenario.validate()?;
        self.key.validate()?;
        self.scenario.check_nyquist(self.key.band_hz[1])?;
        if self.key.band_hz[1] >= self.scenario.policy.rate_hz / 2.0 {
            return Err(Error::config("key band must lie below the policy Nyquist frequency"));
        }
        self.scenario.bounds.digital_band(&self.key)?;
        Ok(())
    }

    /// Seeds for replication `i`. Both arms share the environment and sensor
    /// seeds; keys are regenerated per replication from the owner seed.
    pub fn seeds(&self, i: usize) -> RunSeeds {
        let environment = mix_seed(self.master_seed, &[i as u64]);
        RunSeeds {
            environment,
            sensor: mix_seed(environment, &[SENSOR_TAG]),
            key: mix_seed(self.key.seed, &[i as u64]),
            wrong_key: mix_seed(self.key.seed, &[WRONG_TAG, i as u64]),
        }
    }

    /// Runs and senses one arm of replication `i`, without scoring.
    pub fn simulate_run(&self, i: usize, watermarked: bool) -> Result<(EpisodeTrace, GlimpseSequence, RunSeeds)> {
        let seeds = self.seeds(i);
        let owner = self.key.with_seed(seeds.key);
        let trace = if watermarked {
            self.strategy.run_watermarked(&self.scenario, &owner, seeds.environment)?
        } else {
            let plant = self.scenario.plant()?;
            crate::simworld::run_episode(
                &self.scenario.policy,
                &plant,
                &self.scenario.task,
                if self.scenario.mean_only {
                    NoiseSource::Silent
                } else {
                    NoiseSource::White { seed: mix_seed(seeds.environment, &[WHITE_TAG]) }
                },
                self.scenario.attack.as_ref(),
                &self.scenario.bounds,
                self.scenario.steps,
                seeds.environment,
            )?
        };
        let mut g = crate::simworld::sense(&trace, &self.scenario.sensor, seeds.sensor)?;
        g.provenance = Provenance {
            scenario: format!("{}-{}", self.scenario.task.name(), self.strategy.name()),
            watermarked,
            key_id: watermarked.then(|| format!("{:016x}", seeds.key)),
        };
        Ok((trace, g, seeds))
    }

    fn run_one(&self, i: usize, watermarked: bool) -> Result<RunRecord> {
        let (trace, g, seeds) = self.simulate_run(i, watermarked)?;
        let bounds = &self.scenario.bounds;
        let (score, estimated_offset) = self.strategy.score(&g, &self.key.with_seed(seeds.key), bounds, &self.detector)?;
        let wrong_key_score = if self.wrong_key {
            Some(self.strategy.score(&g, &self.key.with_seed(seeds.wrong_key), bounds, &self.detector)?.0)
        } else {
            None
        };
        Ok(RunRecord {
            index: i,
            watermarked,
            environment_seed: seeds.environment,
            key_seed: seeds.key,
            reward: trace.total_reward(),
            score,
            wrong_key_score,
            estimated_offset,
        })
    }
}

/// Outcome of one run of one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub watermarked: bool,
    pub environment_seed: u64,
    pub key_seed: u64,
    pub reward: f64,
    pub score: f64,
    pub wrong_key_score: Option<f64>,
    pub estimated_offset: Option<usize>,
}

/// Scores and rewards of `n` watermarked and `n` plain runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSet {
    pub watermarked: Vec<RunRecord>,
    pub plain: Vec<RunRecord>,
}

impl ReplicationSet {
    pub fn positives(&self) -> Vec<f64> {
        self.watermarked.iter().map(|r| r.score).collect()
    }

    pub fn negatives(&self) -> Vec<f64> {
        self.plain.iter().map(|r| r.score).collect()
    }

    fn wrong(records: &[RunRecord]) -> Result<Vec<f64>> {
        records.iter().map(|r| r.wrong_key_score.ok_or_else(|| Error::config("runs were not scored with a wrong key"))).collect()
    }

    pub fn wrong_positives(&self) -> Result<Vec<f64>> {
        Self::wrong(&self.watermarked)
    }

    pub fn wrong_negatives(&self) -> Result<Vec<f64>> {
        Self::wrong(&self.plain)
    }

    pub fn roc(&self) -> Result<RocCurve> {
        roc_auc(&self.positives(), &self.negatives())
    }

    pub fn auc_ci(&self, level: f64, replicates: usize, seed: u64) -> Result<Interval> {
        auc_ci(&self.positives(), &self.negatives(), level, replicates, seed)
    }

    /// `1 - AUC` of wrong-key scores on watermarked versus plain runs.
    pub fn anonymity(&self) -> Result<f64> {
        Ok(1.0 - self.wrong_key_roc()?.auc)
    }

    pub fn wrong_key_roc(&self) -> Result<RocCurve> {
        roc_auc(&self.wrong_positives()?, &self.wrong_negatives()?)
    }

    pub fn rewards(&self) -> (Vec<f64>, Vec<f64>) {
        (self.watermarked.iter().map(|r| r.reward).collect(), self.plain.iter().map(|r| r.reward).collect())
    }

    pub fn reward_report(&self, level: f64, replicates: usize, seed: u64) -> Result<RewardReport> {
        let (w, p) = self.rewards();
        Ok(RewardReport {
            watermarked: Summary::of(&w)?,
            plain: Summary::of(&p)?,
            difference: mean_difference_ci(&w, &p, level, replicates, seed)?,
        })
    }
}

/// Episode-reward summaries of both arms and the bootstrap interval of the
/// watermarked-minus-plain mean difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardReport {
    pub watermarked: Summary,
    pub plain: Summary,
    pub difference: Interval,
}

/// Runs `plan.n` watermarked and `plan.n` plain replications in parallel.
/// Results do not depend on the number of worker threads.
pub fn run_replications(plan: &ReplicationPlan) -> Result<ReplicationSet> {
    plan.validate()?;
    let jobs: Vec<(usize, bool)> = (0..plan.n).flat_map(|i| [(i, true), (i, false)]).collect();
    let records = jobs
        .par_iter()
        .map(|&(i, wm)| {
            plan.run_one(i, wm).map_err(|e| Error::Replication { index: i, seed: plan.seeds(i).environment, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    let (watermarked, plain) = records.into_iter().partition(|r| r.watermarked);
    Ok(ReplicationSet { watermarked, plain })
}

/// Anonymity of `plan`'s strategy: reruns with wrong-key scoring enabled.
pub fn anonymity(plan: &ReplicationPlan) -> Result<f64> {
    run_replications(&ReplicationPlan { wrong_key: true, ..plan.clone() })?.anonymity()
}

/// Reward summaries and the 95% interval of the mean difference.
pub fn reward_preservation(plan: &ReplicationPlan, replicates: usize) -> Result<RewardReport> {
    run_replications(plan)?.reward_report(0.95, replicates, plan.master_seed)
}
