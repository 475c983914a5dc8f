//! Ready-made scenarios and experiment configs.

use crate::error::{Error, Result};
use crate::harness::{DetectorSettings, Strategy};
use crate::simworld::{GlimpseSensor, Scenario, TaskSpec};
use crate::watermark::{ExplorationScaleSchedule, SecretKey};

use super::config::{ExperimentConfig, ExperimentKind};

/// Default owner band in Hz.
pub const DEFAULT_BAND_HZ: [f64; 2] = [1.2, 2.49];

/// Point-mass navigation at 20 Hz, glimpsed at 100 Hz with noise std 0.25.
pub fn point_mass() -> Scenario {
    let mut s = Scenario::default_for(TaskSpec::PointMass(Default::default()));
    s.policy.schedule = ExplorationScaleSchedule::constant(0.05);
    s.sensor = GlimpseSensor { noise_std: 0.25, ..GlimpseSensor::ideal(100.0) };
    s
}

/// Double-integrator regulation at 20 Hz, glimpsed at 100 Hz with noise std 0.3.
pub fn double_integrator() -> Scenario {
    let mut s = Scenario::default_for(TaskSpec::DoubleIntegrator(Default::default()));
    s.policy.schedule = ExplorationScaleSchedule::constant(0.3);
    s.sensor = GlimpseSensor { noise_std: 0.3, ..GlimpseSensor::ideal(100.0) };
    s
}

pub fn config(scenario: Scenario, experiment: ExperimentKind, n: usize, master_seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        scenario,
        strategy: Strategy::Conoco,
        key: Some(SecretKey { seed: 0x5eed, band_hz: DEFAULT_BAND_HZ }),
        key_file: None,
        n,
        master_seed,
        detector: DetectorSettings::default(),
        experiment,
        bootstrap_replicates: 1000,
        confidence_level: 0.95,
        output_dir: None,
    }
}

pub const PRESET_NAMES: [&str; 3] = ["point_mass", "double_integrator", "smoke"];

/// Named experiment templates: a full ROC on either task, or a short smoke run.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "point_mass" => Ok(config(point_mass(), ExperimentKind::Roc, 100, 1)),
        "double_integrator" => Ok(config(double_integrator(), ExperimentKind::Roc, 100, 1)),
        "smoke" => {
            let mut s = double_integrator();
            s.steps = 200;
            Ok(config(s, ExperimentKind::Roc, 10, 1))
        }
        other => Err(Error::config(format!("unknown preset `{other}`; known: {}", PRESET_NAMES.join(", ")))),
    }
}
