use std::path::{Path, PathBuf};

use assert_cmd::Command;
use serde_json::{json, Value};

fn conoco() -> Command {
    let mut c = Command::cargo_bin("conoco").unwrap();
    c.env_remove("CONOCO_OUTPUT_DIR");
    c
}

fn stdout_of(c: &mut Command) -> String {
    let out = c.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn smoke(n: usize) -> Value {
    let mut v: Value = serde_json::from_str(&stdout_of(conoco().args(["preset", "smoke"]))).unwrap();
    v["n"] = json!(n);
    v
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<_> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|x| x == ext)).collect();
    v.sort();
    v
}

#[test]
fn keygen_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("key.json");
    let out = stdout_of(conoco().args(["keygen", "--seed", "7", "--band", "1.2", "2.49", "--out"]).arg(&p));
    assert_eq!(out.trim(), "7");
    let key: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(key, json!({"seed": 7, "band_hz": [1.2, 2.49]}));
}

#[test]
fn keygen_inverted_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = conoco().args(["keygen", "--band", "2.49", "1.2", "--out"]).arg(dir.path().join("k.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("band"));
    assert!(!dir.path().join("k.json").exists());
}

#[test]
fn keygen_entropy_seeds_differ() {
    let dir = tempfile::tempdir().unwrap();
    let a = stdout_of(conoco().args(["keygen", "--band", "1", "2", "--out"]).arg(dir.path().join("a.json")));
    let b = stdout_of(conoco().args(["keygen", "--band", "1", "2", "--out"]).arg(dir.path().join("b.json")));
    assert_ne!(a.trim(), b.trim());
}

#[test]
fn simulate_writes_one_file_per_run_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &smoke(2));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    stdout_of(conoco().arg("simulate").arg(&cfg).arg("--out").arg(&a));
    stdout_of(conoco().arg("simulate").arg(&cfg).arg("--out").arg(&b));
    let mut count = 0;
    for arm in ["watermarked", "plain"] {
        let fa = files_with_ext(&a.join(arm), "csv");
        assert_eq!(fa.len(), 2);
        count += fa.len();
        for f in fa {
            let g = std::fs::read(&f).unwrap();
            assert_eq!(g, std::fs::read(b.join(arm).join(f.file_name().unwrap())).unwrap());
            let text = String::from_utf8(g).unwrap();
            assert_eq!(text.lines().next().unwrap().split(',').next(), Some("t"));
            let side: Value = serde_json::from_str(&std::fs::read_to_string(f.with_extension("json")).unwrap()).unwrap();
            assert_eq!(side["config"]["master_seed"], json!(1));
        }
    }
    assert_eq!(count, 4);
}

#[test]
fn simulate_honours_output_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &smoke(2));
    let target = dir.path().join("from_env");
    stdout_of(conoco().env("CONOCO_OUTPUT_DIR", &target).arg("simulate").arg(&cfg));
    assert!(target.join("simulation.json").exists());
}

#[test]
fn simulate_rejects_undersampled_sensor() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = smoke(2);
    v["scenario"]["sensor"]["rate_hz"] = json!(4.0);
    let cfg = write_config(dir.path(), "c.json", &v);
    let out = conoco().arg("simulate").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("twice the band edge"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn simulate_reports_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = smoke(2);
    v["scenario"]["sensor"]["rate"] = json!(100.0);
    let cfg = write_config(dir.path(), "c.json", &v);
    let out = conoco().arg("simulate").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario.sensor"));
}

fn simulated_run(dir: &Path, v: &Value) -> (PathBuf, PathBuf) {
    let cfg = write_config(dir, "c.json", v);
    stdout_of(conoco().arg("simulate").arg(&cfg).arg("--out").arg(dir.join("sim")));
    let key = dir.join("key.json");
    let k = &v["key"];
    std::fs::write(&key, k.to_string()).unwrap();
    (dir.join("sim/watermarked/run_0000.csv"), key)
}

fn detect(glimpses: &Path, key: &Path, extra: &[&str]) -> std::process::Output {
    conoco().arg("detect").arg(glimpses).arg("--key").arg(key).args(["--f-lb", "19", "--f-ub", "21"]).args(extra).output().unwrap()
}

#[test]
fn detect_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let (g, key) = simulated_run(dir.path(), &smoke(2));
    let out = detect(&g, &key, &[]);
    assert!(out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    let s = r["score"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&s));
    assert_eq!(r["hypotheses"].as_array().unwrap().len(), 41);
    assert!(r["estimated_offset"].is_null());

    let out = detect(&g, &key, &["--grid-points", "5"]);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["hypotheses"].as_array().unwrap().len(), 5);

    assert_eq!(detect(&g, &key, &["--threshold", "1.5"]).status.code(), Some(1));
    assert_eq!(detect(&g, &key, &["--threshold", "0"]).status.code(), Some(0));
}

#[test]
fn detect_estimates_offset() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = smoke(2);
    v["scenario"]["sensor"]["offset_s"] = json!(1.5);
    let (g, key) = simulated_run(dir.path(), &v);
    let out = detect(&g, &key, &["--offset-handling", "--max-offset-s", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r["estimated_offset"].as_f64().is_some());
}

#[test]
fn detect_truncated_file_is_insufficient() {
    let dir = tempfile::tempdir().unwrap();
    let (g, key) = simulated_run(dir.path(), &smoke(2));
    let text = std::fs::read_to_string(&g).unwrap();
    let short: String = text.lines().take(40).map(|l| format!("{l}\n")).collect();
    let p = dir.path().join("short.csv");
    std::fs::write(&p, short).unwrap();
    let out = detect(&p, &key, &["--rate-hz", "100"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn detect_malformed_row_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let (g, key) = simulated_run(dir.path(), &smoke(2));
    let mut lines: Vec<String> = std::fs::read_to_string(&g).unwrap().lines().map(String::from).collect();
    lines[5] = "0.04,abc,1".into();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, lines.join("\n")).unwrap();
    let out = detect(&p, &key, &["--rate-hz", "100"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 6"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn experiment_smoke_roc() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &smoke(10));
    let out_dir = dir.path().join("out");
    let summary: Value = serde_json::from_str(&stdout_of(conoco().arg("experiment").arg(&cfg).arg("--out").arg(&out_dir))).unwrap();
    assert!(summary["auc"].as_f64().is_some());
    let scores = std::fs::read_to_string(out_dir.join("scores.csv")).unwrap();
    let mut lines = scores.lines();
    let provenance: Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    assert_eq!(provenance["n"], json!(10));
    lines.next();
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.iter().filter(|l| l.contains(",watermarked,")).count(), 10);
    assert_eq!(rows.iter().filter(|l| l.contains(",plain,")).count(), 10);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(written["auc"], summary["auc"]);
}

#[test]
fn experiment_sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = smoke(4);
    v["experiment"] = json!({"kind": "sweep", "axis": "length", "values": [100, 150, 200]});
    let cfg = write_config(dir.path(), "c.json", &v);
    stdout_of(conoco().arg("experiment").arg(&cfg).arg("--out").arg(dir.path().join("o")));
    let csv = std::fs::read_to_string(dir.path().join("o/sweep.csv")).unwrap();
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), 4);
}

#[test]
fn experiment_rejects_unknown_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = smoke(4);
    v["strategy"] = json!({"kind": "pink_noise"});
    let cfg = write_config(dir.path(), "c.json", &v);
    let out = conoco().arg("experiment").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strategy"));
}

#[test]
fn schema_lists_strategies() {
    let s: Value = serde_json::from_str(&stdout_of(conoco().arg("schema"))).unwrap();
    assert_eq!(s["title"], json!("ExperimentConfig"));
}
