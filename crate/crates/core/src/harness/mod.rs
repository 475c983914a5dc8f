//! Replications, ROC and bootstrap metrics, and parameter sweeps.

pub mod metrics;
pub mod replication;
pub mod sweep;

pub use metrics::{auc_ci, bootstrap_ci, bootstrap_ci2, mean_difference_ci, roc_auc, Interval, RocCurve, Summary};
pub use replication::{
    anonymity, reward_preservation, run_replications, DetectorSettings, ReplicationPlan, ReplicationSet, RewardReport, RunRecord, RunSeeds,
    Strategy,
};
pub use sweep::{sweep, sweep_csv, SweepAxis, SweepRow};
