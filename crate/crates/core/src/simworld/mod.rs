//! Synthetic plants, Gaussian policies, glimpse sensors and action attacks.

pub mod attack;
pub mod episode;
pub mod plant;
pub mod sensor;
pub mod task;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

pub use attack::{attack_additive, attack_bandstop, attack_jam, Attack};
pub use episode::{run_episode, substeps, EpisodeTrace, GaussianPolicy, NoiseSource};
pub use plant::LinearPlant;
pub use sensor::{sense, GlimpseDrop, GlimpseSensor};
pub use task::{DoubleIntegratorTask, PointMassTask, TaskSpec, TaskState};

use crate::error::{Error, Result};
use crate::watermark::{ExplorationScaleSchedule, PolicyRateBounds};

fn default_substeps() -> usize {
    10
}

/// One plant, policy and sensor setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub task: TaskSpec,
    pub policy: GaussianPolicy,
    pub bounds: PolicyRateBounds,
    /// Policy steps per episode.
    pub steps: usize,
    /// Plant steps per policy period.
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default)]
    pub process_noise_std: f64,
    pub sensor: GlimpseSensor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<Attack>,
    /// Zero exploration: every arm executes the mean rule only.
    #[serde(default)]
    pub mean_only: bool,
}

impl Scenario {
    /// 20 Hz policy with bounds [19, 21], 1000 steps, ideal 100 Hz sensor, unit exploration.
    pub fn default_for(task: TaskSpec) -> Self {
        Self {
            task,
            policy: GaussianPolicy { rate_hz: 20.0, schedule: ExplorationScaleSchedule::constant(1.0), saturation: None },
            bounds: PolicyRateBounds { f_lb: 19.0, f_ub: 21.0 },
            steps: 1000,
            substeps: default_substeps(),
            process_noise_std: 0.0,
            sensor: GlimpseSensor::ideal(100.0),
            attack: None,
            mean_only: false,
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / (self.policy.rate_hz * self.substeps as f64)
    }

    pub fn plant(&self) -> Result<LinearPlant> {
        let mut p = self.task.plant(self.dt())?;
        p.process_noise_std = self.process_noise_std;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if !self.bounds.contains(self.policy.rate_hz) {
            return Err(Error::config(format!(
                "policy rate {} Hz lies outside the bounds [{}, {}]",
                self.policy.rate_hz, self.bounds.f_lb, self.bounds.f_ub
            )));
        }
        if self.substeps < 10 {
            return Err(Error::config("at least 10 plant steps per policy period are required"));
        }
        if self.steps == 0 {
            return Err(Error::config("episode needs at least one policy step"));
        }
        if self.process_noise_std < 0.0 {
            return Err(Error::config("process noise must be non-negative"));
        }
        self.policy.schedule.validate()?;
        self.sensor.validate()
    }

    /// Rejects glimpse rates that cannot resolve `band_high_hz`.
    pub fn check_nyquist(&self, band_high_hz: f64) -> Result<()> {
        if self.sensor.rate_hz <= 2.0 * band_high_hz {
            return Err(Error::config(format!(
                "glimpse rate {} Hz must exceed twice the band edge {} Hz",
                self.sensor.rate_hz, band_high_hz
            )));
        }
        Ok(())
    }

    /// Runs one episode and senses it.
    pub fn simulate(&self, noise: NoiseSource<'_>, seed: u64, sensor_seed: u64) -> Result<(EpisodeTrace, crate::glimpse::GlimpseSequence)> {
        let plant = self.plant()?;
        let trace = run_episode(&self.policy, &plant, &self.task, noise, self.attack.as_ref(), &self.bounds, self.steps, seed)?;
        let g = sense(&trace, &self.sensor, sensor_seed)?;
        Ok((trace, g))
    }
}
