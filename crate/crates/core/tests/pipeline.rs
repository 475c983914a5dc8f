//! End-to-end properties of the simulate, sense and detect pipeline.

use std::path::Path;

use nalgebra::{Complex, DMatrix};

use conoco::detect::{detect, DetectionConfig, DEFAULT_GRID_POINTS};
use conoco::experiment::presets;
use conoco::glimpse::GlimpseSequence;
use conoco::harness::metrics::mean;
use conoco::harness::{mean_difference_ci, run_replications, ReplicationPlan, Strategy};
use conoco::sigproc::{band_power, welch_psd, welch_spectra, Welch};
use conoco::simworld::{attack_jam, Attack, Scenario, TaskSpec};
use conoco::watermark::{generate_watermark, PolicyRateBounds, SecretKey};

fn key() -> SecretKey {
    SecretKey::new(0x5eed, presets::DEFAULT_BAND_HZ).unwrap()
}

fn bounds() -> PolicyRateBounds {
    PolicyRateBounds::new(19.0, 21.0).unwrap()
}

fn plan(scenario: Scenario, strategy: Strategy, n: usize, seed: u64) -> ReplicationPlan {
    let mut cfg = presets::config(scenario, conoco::experiment::ExperimentKind::Roc, n, seed);
    cfg.strategy = strategy;
    cfg.plan().unwrap()
}

fn score(g: &GlimpseSequence, key: &SecretKey) -> f64 {
    detect(g, key, &bounds(), &DetectionConfig::new(&bounds(), DEFAULT_GRID_POINTS)).unwrap().score
}

fn quiet_t2() -> Scenario {
    let mut s = presets::double_integrator();
    s.sensor.noise_std = 0.01;
    s
}

#[test]
fn seeded_runs_are_bit_identical() {
    let p = plan(presets::double_integrator(), Strategy::Conoco, 4, 5);
    let (ta, ga, sa) = p.simulate_run(2, true).unwrap();
    let (tb, gb, sb) = p.simulate_run(2, true).unwrap();
    assert_eq!(sa, sb);
    assert_eq!(ta, tb);
    assert_eq!(ga.to_csv(), gb.to_csv());
    let other = plan(presets::double_integrator(), Strategy::Conoco, 4, 6);
    assert_ne!(other.simulate_run(2, true).unwrap().1.to_csv(), ga.to_csv());
}

#[test]
fn detection_reads_only_the_glimpse_file() {
    let p = plan(quiet_t2(), Strategy::Conoco, 2, 1);
    let (_, g, seeds) = p.simulate_run(0, true).unwrap();
    let owner = p.key.with_seed(seeds.key);
    let reread = GlimpseSequence::from_csv(&g.to_csv(), g.rate_hz, Path::new("mem.csv")).unwrap();
    assert_eq!(score(&g, &owner), score(&reread, &owner));
    assert!(score(&g, &owner) > 0.6);
}

#[test]
fn score_is_unchanged_by_lti_glimpse_maps() {
    // the 256-sample window keeps low-frequency leakage out of the band
    let mut s = quiet_t2();
    s.steps = 4000;
    let p = plan(s, Strategy::Conoco, 3, 4);
    for i in 0..3 {
        let (_, g, seeds) = p.simulate_run(i, true).unwrap();
        let owner = p.key.with_seed(seeds.key);
        let base = score(&g, &owner);
        let diffed: Vec<Vec<f64>> = g.samples.iter().map(|c| c.windows(2).map(|w| 3.0 * (w[1] - w[0])).collect()).collect();
        let dg = GlimpseSequence::uniform(diffed, g.rate_hz).unwrap();
        let changed = score(&dg, &owner);
        assert!((base - changed).abs() < 0.05, "run {i}: {base} vs {changed}");
    }
}

#[test]
fn score_does_not_rise_with_glimpse_noise() {
    let levels = [0.0, 0.1, 0.3, 1.0, 3.0];
    let means: Vec<f64> = levels
        .iter()
        .map(|&sd| {
            let mut s = presets::double_integrator();
            s.sensor.noise_std = sd;
            let p = plan(s, Strategy::Conoco, 8, 9);
            let v: Vec<f64> = (0..p.n)
                .map(|i| {
                    let (_, g, seeds) = p.simulate_run(i, true).unwrap();
                    score(&g, &p.key.with_seed(seeds.key))
                })
                .collect();
            mean(&v)
        })
        .collect();
    for w in means.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{means:?}");
    }
}

#[test]
fn best_rate_lands_near_the_true_rate() {
    let p = plan(quiet_t2(), Strategy::Conoco, 20, 12);
    let step = 2.0 / (DEFAULT_GRID_POINTS - 1) as f64;
    let hits = (0..p.n)
        .filter(|&i| {
            let (_, g, seeds) = p.simulate_run(i, true).unwrap();
            let r = detect(&g, &p.key.with_seed(seeds.key), &bounds(), &DetectionConfig::new(&bounds(), DEFAULT_GRID_POINTS)).unwrap();
            (r.best_rate_hz - 20.0).abs() <= step + 1e-9
        })
        .count();
    assert!(hits * 100 >= 95 * p.n, "{hits} of {}", p.n);
}

fn response(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, f: f64) -> f64 {
    let z = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * f);
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| if i == j { z } else { Complex::new(0.0, 0.0) }) - a.map(|v| Complex::new(v, 0.0));
    let h = c.map(|v| Complex::new(v, 0.0)) * m.try_inverse().unwrap() * b.map(|v| Complex::new(v, 0.0));
    h[(0, 0)].norm()
}

#[test]
fn plant_transfer_matches_the_model_in_band() {
    let fs = 20.0;
    let plant = TaskSpec::DoubleIntegrator(Default::default()).plant(1.0 / fs).unwrap();
    let n = 1 << 16;
    let w = generate_watermark(&key(), n, 2, &bounds()).unwrap();
    let mut x = vec![0.0; plant.states()];
    let mut scratch = vec![0.0; plant.states()];
    let mut y = vec![0.0; plant.outputs()];
    let mut vel = Vec::with_capacity(n);
    for k in 0..n {
        plant.step(&mut x, &w.row(k), &mut scratch);
        plant.output_into(&x, &mut y);
        vel.push(y[0]);
    }
    // output k is read after input k, a pure advance that leaves |H| unchanged
    let spec = welch_spectra(&w.columns[0], &vel, &Welch::new(fs, 1024)).unwrap();
    let c = DMatrix::from_row_slice(1, 4, &[0.0, 0.0, 1.0, 0.0]);
    let b = plant.b.columns(0, 1).into_owned();
    let mut checked = 0;
    for (k, &f) in spec.frequencies.iter().enumerate() {
        if !(1.2..=2.49).contains(&f) {
            continue;
        }
        let emp = spec.sxy[k].norm() / spec.sxx[k];
        let model = response(&plant.a, &b, &c, f / fs);
        let db = 20.0 * (emp / model).log10();
        assert!(db.abs() < 1.0, "{f} Hz: {db} dB");
        checked += 1;
    }
    assert!(checked > 10);
}

#[test]
fn multisine_wrong_seed_still_separates() {
    let mut s = presets::double_integrator();
    s.sensor.noise_std = 0.03;
    let mut p = plan(s, Strategy::Multisine { tones: 8 }, 40, 2);
    p.wrong_key = true;
    let set = run_replications(&p).unwrap();
    let auc = set.wrong_key_roc().unwrap().auc;
    assert!(auc > 0.7, "wrong-seed AUC {auc}");
}

#[test]
fn jamming_with_the_owner_key_cancels_it() {
    let w = generate_watermark(&key(), 20000, 2, &bounds()).unwrap();
    let scales = vec![vec![0.3, 0.3]; 20000];
    let marked = attack_jam(&vec![vec![0.0; 20000]; 2], &scales, &w.columns, 1.0);
    let cleaned = attack_jam(&marked, &scales, &w.columns, -1.0);
    let params = Welch::new(20.0, 512);
    for (m, c) in marked.iter().zip(&cleaned) {
        let (f, pm) = welch_psd(m, &params).unwrap();
        let (_, pc) = welch_psd(c, &params).unwrap();
        let band = (1.2, 2.49);
        assert!(band_power(&f, &pc, band) < 0.01 * band_power(&f, &pm, band));
    }
}

#[test]
fn jamming_is_no_worse_than_equal_power_noise() {
    let n = 30;
    let sigma = 0.3;
    let (lo, hi) = bounds().digital_band(&key()).unwrap();
    // white noise puts a fraction 2 (hi - lo) of its variance in the digital band
    let additive = sigma / (2.0 * (hi - lo)).sqrt();
    let mut jammed = presets::double_integrator();
    jammed.attack = Some(Attack::Jam { key: key().with_seed(0xbad), gain: 1.0 });
    let mut noisy = presets::double_integrator();
    noisy.attack = Some(Attack::Additive { sigma: additive, clip: None });
    let j = run_replications(&plan(jammed, Strategy::Conoco, n, 13)).unwrap().positives();
    let a = run_replications(&plan(noisy, Strategy::Conoco, n, 13)).unwrap().positives();
    let ci = mean_difference_ci(&j, &a, 0.95, 1000, 3).unwrap();
    assert!(ci.hi >= 0.0, "jam minus additive {ci:?}");
}
