use nalgebra::DMatrix;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::plant::LinearPlant;
use crate::error::Result;
use crate::sigproc::rng::Xoshiro256;

/// Velocity-commanded planar point mass that drives to goals resampled on arrival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct PointMassTask {
    /// Time constant of the velocity loop, seconds.
    pub velocity_lag_s: f64,
    /// Proportional gain from goal error to commanded velocity, 1/s.
    pub gain: f64,
    /// Goals and start positions are uniform in `[-arena, arena]^2`.
    pub arena: f64,
    pub arrival_radius: f64,
}

impl Default for PointMassTask {
    fn default() -> Self {
        Self { velocity_lag_s: 0.05, gain: 1.0, arena: 1.0, arrival_radius: 0.05 }
    }
}

/// Force-commanded damped planar double integrator regulated to the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct DoubleIntegratorTask {
    pub mass: f64,
    pub damping: f64,
    pub kp: f64,
    pub kd: f64,
    /// Start positions are uniform in `[-spread, spread]^2`, at rest.
    pub initial_spread: f64,
    pub action_cost: f64,
}

impl Default for DoubleIntegratorTask {
    fn default() -> Self {
        Self { mass: 1.0, damping: 0.5, kp: 4.0, kd: 2.0, initial_spread: 1.0, action_cost: 0.01 }
    }
}

/// The two synthetic tasks. State is `[px, py, vx, vy]`; the observable output
/// is the velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskSpec {
    PointMass(PointMassTask),
    DoubleIntegrator(DoubleIntegratorTask),
}

/// Per-episode task memory (the current goal for the point mass).
#[derive(Debug, Clone, PartialEq)]
pub struct TaskState {
    pub goal: [f64; 2],
}

fn velocity_output() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 4, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0])
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::PointMass(_) => "point_mass",
            TaskSpec::DoubleIntegrator(_) => "double_integrator",
        }
    }

    pub fn action_dims(&self) -> usize {
        2
    }

    /// Continuous-time `(A, B)`.
    fn continuous(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let (decay, gain) = match *self {
            TaskSpec::PointMass(t) => (1.0 / t.velocity_lag_s, 1.0 / t.velocity_lag_s),
            TaskSpec::DoubleIntegrator(t) => (t.damping / t.mass, 1.0 / t.mass),
        };
        #[rustfmt::skip]
        let a = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, -decay, 0.0,
            0.0, 0.0, 0.0, -decay,
        ]);
        #[rustfmt::skip]
        let b = DMatrix::from_row_slice(4, 2, &[
            0.0, 0.0,
            0.0, 0.0,
            gain, 0.0,
            0.0, gain,
        ]);
        (a, b)
    }

    pub fn plant(&self, dt: f64) -> Result<LinearPlant> {
        let (a, b) = self.continuous();
        LinearPlant::from_continuous(&a, &b, velocity_output(), dt)
    }

    pub fn reset(&self, rng: &mut Xoshiro256) -> (Vec<f64>, TaskState) {
        match *self {
            TaskSpec::PointMass(t) => {
                let p = [rng.uniform(-t.arena, t.arena), rng.uniform(-t.arena, t.arena)];
                let goal = [rng.uniform(-t.arena, t.arena), rng.uniform(-t.arena, t.arena)];
                (vec![p[0], p[1], 0.0, 0.0], TaskState { goal })
            }
            TaskSpec::DoubleIntegrator(t) => {
                let s = t.initial_spread;
                (vec![rng.uniform(-s, s), rng.uniform(-s, s), 0.0, 0.0], TaskState { goal: [0.0, 0.0] })
            }
        }
    }

    /// Deterministic part of the policy.
    pub fn mean_action(&self, x: &[f64], st: &TaskState) -> Vec<f64> {
        match *self {
            TaskSpec::PointMass(t) => vec![t.gain * (st.goal[0] - x[0]), t.gain * (st.goal[1] - x[1])],
            TaskSpec::DoubleIntegrator(t) => vec![-t.kp * x[0] - t.kd * x[2], -t.kp * x[1] - t.kd * x[3]],
        }
    }

    /// Reward for the step that ended in `x` after executing `a`; may update
    /// the task state.
    pub fn reward(&self, x: &[f64], a: &[f64], st: &mut TaskState, rng: &mut Xoshiro256) -> f64 {
        match *self {
            TaskSpec::PointMass(t) => {
                let dist = ((st.goal[0] - x[0]).powi(2) + (st.goal[1] - x[1]).powi(2)).sqrt();
                if dist < t.arrival_radius {
                    st.goal = [rng.uniform(-t.arena, t.arena), rng.uniform(-t.arena, t.arena)];
                }
                -dist
            }
            TaskSpec::DoubleIntegrator(t) => {
                let xs: f64 = x.iter().map(|v| v * v).sum();
                let us: f64 = a.iter().map(|v| v * v).sum();
                -(xs + t.action_cost * us)
            }
        }
    }
}
