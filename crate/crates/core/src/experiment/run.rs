use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind};
use super::io::{csv_with_provenance, write_atomic, write_glimpses, write_json};
use crate::error::{Error, Result};
use crate::harness::{run_replications, sweep, sweep_csv, ReplicationSet, RocCurve};

const BOOTSTRAP_NOTE: &str = "percentile bootstrap over per-replication scores, each arm resampled independently";

fn arm_name(watermarked: bool) -> &'static str {
    if watermarked {
        "watermarked"
    } else {
        "plain"
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// Per-run table: one line per arm and replication.
pub fn scores_csv(set: &ReplicationSet) -> String {
    let mut out = String::from("index,arm,environment_seed,key_seed,reward,score,wrong_key_score,estimated_offset\n");
    for r in set.watermarked.iter().chain(&set.plain) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.index,
            arm_name(r.watermarked),
            r.environment_seed,
            r.key_seed,
            r.reward,
            r.score,
            opt(r.wrong_key_score),
            opt(r.estimated_offset)
        ));
    }
    out
}

pub fn roc_csv(roc: &RocCurve) -> String {
    let mut out = String::from("fpr,tpr\n");
    for (f, t) in &roc.points {
        out.push_str(&format!("{f},{t}\n"));
    }
    out
}

/// Simulates every replication of both arms and writes glimpse files under
/// `out/plain` and `out/watermarked`. Actions and states are never written.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Value> {
    cfg.validate()?;
    let plan = cfg.plan()?;
    let jobs: Vec<(usize, bool)> = (0..plan.n).flat_map(|i| [(i, true), (i, false)]).collect();
    let runs = jobs
        .par_iter()
        .map(|&(i, wm)| {
            plan.simulate_run(i, wm).map(|(trace, g, seeds)| (i, wm, trace.total_reward(), g, seeds)).map_err(|e| Error::Replication {
                index: i,
                seed: plan.seeds(i).environment,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let sensor = serde_json::to_value(&cfg.scenario.sensor).expect("sensor serializes");
    let mut rows = Vec::new();
    for (i, wm, reward, g, seeds) in &runs {
        let dir = out.join(arm_name(*wm));
        let stem = format!("run_{i:04}");
        write_glimpses(&dir, &stem, g, sensor.clone(), cfg)?;
        rows.push(json!({
            "index": i,
            "arm": arm_name(*wm),
            "file": format!("{}/{stem}.csv", arm_name(*wm)),
            "glimpses": g.len(),
            "environment_seed": seeds.environment,
            "key_seed": seeds.key,
            "reward": reward,
        }));
    }
    let summary = json!({ "config": cfg, "runs": rows });
    write_json(&out.join("simulation.json"), &summary)?;
    Ok(summary)
}

/// Runs the configured experiment and writes its tables into `out`.
/// Returns the JSON summary that is also written to `summary.json`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Value> {
    cfg.validate()?;
    let plan = cfg.plan()?;
    let (reps, level, seed) = (cfg.bootstrap_replicates, cfg.confidence_level, cfg.master_seed);
    let mut summary = json!({
        "config": cfg,
        "experiment": cfg.experiment.name(),
        "n": cfg.n,
        "bootstrap": { "method": BOOTSTRAP_NOTE, "replicates": reps, "level": level },
    });

    match &cfg.experiment {
        ExperimentKind::Sweep { axis, values } => {
            let rows = sweep(&plan, *axis, values, reps)?;
            write_atomic(&out.join("sweep.csv"), csv_with_provenance(cfg, &sweep_csv(&rows)).as_bytes())?;
            summary["axis"] = json!(axis.name());
            summary["rows"] = serde_json::to_value(&rows).expect("rows serialize");
        }
        kind => {
            let set = run_replications(&plan)?;
            write_atomic(&out.join("scores.csv"), csv_with_provenance(cfg, &scores_csv(&set)).as_bytes())?;
            let roc = set.roc()?;
            write_atomic(&out.join("roc.csv"), csv_with_provenance(cfg, &roc_csv(&roc)).as_bytes())?;
            summary["auc"] = json!(roc.auc);
            summary["auc_ci"] = serde_json::to_value(set.auc_ci(level, reps, seed)?).expect("interval serializes");
            match kind {
                ExperimentKind::Anonymity => {
                    let wrong = set.wrong_key_roc()?;
                    write_atomic(&out.join("roc_wrong_key.csv"), csv_with_provenance(cfg, &roc_csv(&wrong)).as_bytes())?;
                    summary["wrong_key_auc"] = json!(wrong.auc);
                    summary["anonymity"] = json!(1.0 - wrong.auc);
                }
                ExperimentKind::Reward => {
                    summary["reward"] = serde_json::to_value(set.reward_report(level, reps, seed)?).expect("report serializes");
                }
                _ => {}
            }
        }
    }
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Output directory: explicit argument, then the config, then `fallback`.
pub fn resolve_output_dir(explicit: Option<&Path>, cfg: &ExperimentConfig, fallback: PathBuf) -> PathBuf {
    explicit.map(Path::to_path_buf).or_else(|| cfg.output_dir.clone()).unwrap_or(fallback)
}
