use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigproc::rng::Xoshiro256;

/// Area under the ROC curve plus the curve itself as `(fpr, tpr)` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub auc: f64,
    pub points: Vec<(f64, f64)>,
}

/// Mann-Whitney AUC with ties counted half, and one ROC point per distinct
/// threshold from strictest to loosest.
pub fn roc_auc(positives: &[f64], negatives: &[f64]) -> Result<RocCurve> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::invalid("ROC needs at least one positive and one negative score"));
    }
    if positives.iter().chain(negatives).any(|v| v.is_nan()) {
        return Err(Error::invalid("scores must not be NaN"));
    }
    let mut all: Vec<(f64, bool)> = positives.iter().map(|&v| (v, true)).chain(negatives.iter().map(|&v| (v, false))).collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (np, nn) = (positives.len() as f64, negatives.len() as f64);

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut u = 0.0;
    let mut i = 0;
    while i < all.len() {
        let v = all[i].0;
        let (mut dtp, mut dfp) = (0usize, 0usize);
        while i < all.len() && all[i].0 == v {
            if all[i].1 {
                dtp += 1;
            } else {
                dfp += 1;
            }
            i += 1;
        }
        // negatives in this tie group pair with positives above (wins) and in it (half)
        u += dfp as f64 * (tp as f64 + 0.5 * dtp as f64);
        tp += dtp;
        fp += dfp;
        points.push((fp as f64 / nn, tp as f64 / np));
    }
    // u counts (pos, neg) pairs with pos >= neg from the negatives' side
    Ok(RocCurve { auc: u / (np * nn), points })
}

/// Two-sided interval with its point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let j = pos.floor() as usize;
    if j + 1 >= n {
        return sorted[n - 1];
    }
    let f = pos - j as f64;
    sorted[j] + f * (sorted[j + 1] - sorted[j])
}

fn check_level(level: f64, replicates: usize) -> Result<()> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::invalid(format!("confidence level must lie in [0, 1), got {level}")));
    }
    if replicates == 0 {
        return Err(Error::invalid("bootstrap needs at least one replicate"));
    }
    Ok(())
}

fn percentile_interval(estimate: f64, mut stats: Vec<f64>, level: f64) -> Interval {
    if level == 0.0 {
        return Interval { estimate, lo: estimate, hi: estimate, level };
    }
    stats.sort_by(f64::total_cmp);
    let a = (1.0 - level) / 2.0;
    Interval { estimate, lo: quantile_sorted(&stats, a), hi: quantile_sorted(&stats, 1.0 - a), level }
}

fn resample_into(rng: &mut Xoshiro256, src: &[f64], dst: &mut Vec<f64>) {
    dst.clear();
    dst.extend((0..src.len()).map(|_| src[rng.below(src.len() as u64) as usize]));
}

/// Percentile bootstrap of `statistic` over `samples`.
pub fn bootstrap_ci(samples: &[f64], statistic: impl Fn(&[f64]) -> f64, level: f64, replicates: usize, seed: u64) -> Result<Interval> {
    if samples.len() < 2 {
        return Err(Error::invalid("bootstrap needs at least two samples"));
    }
    check_level(level, replicates)?;
    let estimate = statistic(samples);
    let mut rng = Xoshiro256::from_seed(seed);
    let mut buf = Vec::with_capacity(samples.len());
    let stats = (0..replicates)
        .map(|_| {
            resample_into(&mut rng, samples, &mut buf);
            statistic(&buf)
        })
        .collect();
    Ok(percentile_interval(estimate, stats, level))
}

/// Two-sample percentile bootstrap of `statistic(a, b)`, resampling each
/// sample independently.
pub fn bootstrap_ci2(
    a: &[f64],
    b: &[f64],
    statistic: impl Fn(&[f64], &[f64]) -> f64,
    level: f64,
    replicates: usize,
    seed: u64,
) -> Result<Interval> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("bootstrap needs at least two samples per group"));
    }
    check_level(level, replicates)?;
    let estimate = statistic(a, b);
    let mut rng = Xoshiro256::from_seed(seed);
    let (mut ba, mut bb) = (Vec::with_capacity(a.len()), Vec::with_capacity(b.len()));
    let stats = (0..replicates)
        .map(|_| {
            resample_into(&mut rng, a, &mut ba);
            resample_into(&mut rng, b, &mut bb);
            statistic(&ba, &bb)
        })
        .collect();
    Ok(percentile_interval(estimate, stats, level))
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Bootstrap interval of the AUC, resampling positives and negatives separately.
pub fn auc_ci(positives: &[f64], negatives: &[f64], level: f64, replicates: usize, seed: u64) -> Result<Interval> {
    roc_auc(positives, negatives)?;
    bootstrap_ci2(positives, negatives, |p, n| roc_auc(p, n).map(|r| r.auc).unwrap_or(f64::NAN), level, replicates, seed)
}

/// Bootstrap interval of `mean(a) - mean(b)`.
pub fn mean_difference_ci(a: &[f64], b: &[f64], level: f64, replicates: usize, seed: u64) -> Result<Interval> {
    bootstrap_ci2(a, b, |x, y| mean(x) - mean(y), level, replicates, seed)
}

/// Location and spread of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(v: &[f64]) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::invalid("cannot summarize an empty sample"));
        }
        let m = mean(v);
        let std = if v.len() > 1 { (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt() } else { 0.0 };
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        Ok(Self {
            count: v.len(),
            mean: m,
            std,
            min: s[0],
            q25: quantile_sorted(&s, 0.25),
            median: quantile_sorted(&s, 0.5),
            q75: quantile_sorted(&s, 0.75),
            max: s[s.len() - 1],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigproc::gaussian_stream;

    fn brute_auc(p: &[f64], n: &[f64]) -> f64 {
        let mut s = 0.0;
        for &a in p {
            for &b in n {
                s += if a > b {
                    1.0
                } else if a == b {
                    0.5
                } else {
                    0.0
                };
            }
        }
        s / (p.len() * n.len()) as f64
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[3.0, 4.0], &[1.0, 2.0]).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap().auc, 0.5);
        assert_eq!(roc_auc(&[0.9, 0.4], &[0.5, 0.1]).unwrap().auc, 0.75);
        assert!(roc_auc(&[], &[1.0]).is_err());
    }

    #[test]
    fn auc_matches_pair_count_and_roc_area() {
        let p: Vec<f64> = gaussian_stream(1, 57).iter().map(|v| (v * 3.0).round() / 3.0 + 0.4).collect();
        let n: Vec<f64> = gaussian_stream(2, 43).iter().map(|v| (v * 3.0).round() / 3.0).collect();
        let r = roc_auc(&p, &n).unwrap();
        assert!((r.auc - brute_auc(&p, &n)).abs() < 1e-12);
        let trap: f64 = r.points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum();
        assert!((trap - r.auc).abs() < 1e-12);
        assert_eq!(*r.points.last().unwrap(), (1.0, 1.0));
    }

    #[test]
    fn bootstrap_examples() {
        let c = vec![2.5; 30];
        let i = bootstrap_ci(&c, mean, 0.95, 500, 1).unwrap();
        assert_eq!((i.lo, i.hi), (2.5, 2.5));

        let x = gaussian_stream(9, 1000);
        let i = bootstrap_ci(&x, mean, 0.95, 2000, 3).unwrap();
        assert!((0.10..=0.15).contains(&i.width()), "{}", i.width());
        assert!(i.contains(mean(&x)));

        let i = bootstrap_ci(&x, mean, 0.0, 10, 3).unwrap();
        assert_eq!((i.lo, i.hi), (i.estimate, i.estimate));
        assert!(bootstrap_ci(&[1.0], mean, 0.95, 10, 0).is_err());
    }

    #[test]
    fn bootstrap_is_seeded() {
        let x = gaussian_stream(4, 50);
        let a = bootstrap_ci(&x, mean, 0.9, 300, 7).unwrap();
        assert_eq!(a, bootstrap_ci(&x, mean, 0.9, 300, 7).unwrap());
        assert_ne!(a, bootstrap_ci(&x, mean, 0.9, 300, 8).unwrap());
    }
}
