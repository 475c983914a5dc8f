use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::metrics::{mean, Interval};
use super::replication::{run_replications, ReplicationPlan, ReplicationSet};
use crate::error::{Error, Result};
use crate::simworld::{Attack, GlimpseDrop};

/// Scenario parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Policy steps per episode.
    Length,
    /// Sensor start offset in seconds.
    Offset,
    /// Relative glimpse-interval jitter.
    Jitter,
    /// Fraction of glimpses dropped.
    Drop,
    /// Equal camera tilt about x and y, degrees.
    Projection,
    /// Additive attack standard deviation.
    AdversaryStrength,
    /// Band-stop attack order over the key band.
    BandstopOrder,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Length => "length",
            SweepAxis::Offset => "offset",
            SweepAxis::Jitter => "jitter",
            SweepAxis::Drop => "drop",
            SweepAxis::Projection => "projection",
            SweepAxis::AdversaryStrength => "adversary_strength",
            SweepAxis::BandstopOrder => "bandstop_order",
        }
    }

    /// Copy of `plan` with this axis set to `value`.
    pub fn apply(&self, plan: &ReplicationPlan, value: f64) -> Result<ReplicationPlan> {
        let mut p = plan.clone();
        let s = &mut p.scenario;
        let whole = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::config(format!("{} sweep needs whole numbers, got {v}", self.name())))
            }
        };
        match self {
            SweepAxis::Length => s.steps = whole(value)?,
            SweepAxis::Offset => s.sensor.offset_s = value,
            SweepAxis::Jitter => s.sensor.jitter = value,
            SweepAxis::Drop => s.sensor.drop = (value > 0.0).then_some(GlimpseDrop::Fraction(value)),
            SweepAxis::Projection => s.sensor.projection_deg = Some([value, value]),
            SweepAxis::AdversaryStrength => {
                let clip = match s.attack {
                    Some(Attack::Additive { clip, .. }) => clip,
                    _ => None,
                };
                s.attack = Some(Attack::Additive { sigma: value, clip });
            }
            SweepAxis::BandstopOrder => s.attack = Some(Attack::BandStop { band_hz: plan.key.band_hz, order: whole(value)? }),
        }
        Ok(p)
    }
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub auc: f64,
    pub auc_ci: Interval,
    pub mean_positive_score: f64,
    pub mean_negative_score: f64,
    pub mean_reward_watermarked: f64,
    pub mean_reward_plain: f64,
}

impl SweepRow {
    pub fn from_set(value: f64, set: &ReplicationSet, replicates: usize, seed: u64) -> Result<Self> {
        let (w, p) = set.rewards();
        Ok(Self {
            value,
            auc: set.roc()?.auc,
            auc_ci: set.auc_ci(0.95, replicates, seed)?,
            mean_positive_score: mean(&set.positives()),
            mean_negative_score: mean(&set.negatives()),
            mean_reward_watermarked: mean(&w),
            mean_reward_plain: mean(&p),
        })
    }
}

pub const SWEEP_CSV_HEADER: &str =
    "value,auc,auc_ci_lo,auc_ci_hi,mean_positive_score,mean_negative_score,mean_reward_watermarked,mean_reward_plain";

/// CSV body (header plus one line per row).
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.value,
            r.auc,
            r.auc_ci.lo,
            r.auc_ci.hi,
            r.mean_positive_score,
            r.mean_negative_score,
            r.mean_reward_watermarked,
            r.mean_reward_plain
        ));
    }
    out
}

/// One replication batch per value, all sharing the plan's master seed.
pub fn sweep(plan: &ReplicationPlan, axis: SweepAxis, values: &[f64], replicates: usize) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    values
        .iter()
        .map(|&v| {
            let set = run_replications(&axis.apply(plan, v)?)?;
            SweepRow::from_set(v, &set, replicates, plan.master_seed)
        })
        .collect()
}
