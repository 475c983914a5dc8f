//! Remote observations: the only input a detector ever sees.

use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a glimpse sequence came from. Carried for bookkeeping only; detectors
/// never read it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Provenance {
    pub scenario: String,
    pub watermarked: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_id: Option<String>,
}

/// `D` channels sampled at nominal rate `rate_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlimpseSequence {
    /// `samples[d][i]` is channel `d + 1` at glimpse `i`.
    pub samples: Vec<Vec<f64>>,
    pub rate_hz: f64,
    /// Seconds since the first retained glimpse; strictly increasing.
    pub timestamps: Vec<f64>,
    pub provenance: Provenance,
}

impl GlimpseSequence {
    pub fn new(samples: Vec<Vec<f64>>, rate_hz: f64, timestamps: Vec<f64>) -> Result<Self> {
        let g = Self { samples, rate_hz, timestamps, provenance: Provenance::default() };
        g.validate()?;
        Ok(g)
    }

    /// Evenly spaced glimpses at `rate_hz` starting from `t = 0`.
    pub fn uniform(samples: Vec<Vec<f64>>, rate_hz: f64) -> Result<Self> {
        let n = samples.first().map_or(0, Vec::len);
        let ts = (0..n).map(|i| i as f64 / rate_hz).collect();
        Self::new(samples, rate_hz, ts)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(Error::invalid(format!("glimpse rate must be positive, got {}", self.rate_hz)));
        }
        if self.samples.is_empty() {
            return Err(Error::invalid("glimpse sequence has no channels"));
        }
        let n = self.timestamps.len();
        if self.samples.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("glimpse channels and timestamps differ in length"));
        }
        if self.timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("glimpse timestamps must be strictly increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.samples.len()
    }

    /// Channels on a uniform grid. Gaps of at least 1.5 nominal periods (from
    /// dropped glimpses) are filled by linear interpolation with
    /// `round(gap * rate) - 1` samples; smaller timing irregularities are
    /// ignored, so samples are otherwise taken as evenly spaced.
    pub fn regularized(&self) -> Vec<Vec<f64>> {
        let fg = self.rate_hz;
        let mut out: Vec<Vec<f64>> = self.samples.iter().map(|c| Vec::with_capacity(c.len())).collect();
        for i in 0..self.len() {
            if i > 0 {
                let steps = (self.timestamps[i] - self.timestamps[i - 1]) * fg;
                if steps >= 1.5 {
                    let missing = steps.round() as usize - 1;
                    for (o, c) in out.iter_mut().zip(&self.samples) {
                        let (a, b) = (c[i - 1], c[i]);
                        for j in 1..=missing {
                            o.push(a + (b - a) * j as f64 / (missing + 1) as f64);
                        }
                    }
                }
            }
            for (o, c) in out.iter_mut().zip(&self.samples) {
                o.push(c[i]);
            }
        }
        out
    }

    /// CSV with header `t,g_1,...,g_D`; values written with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * (self.dims() + 1) * 24);
        out.push('t');
        for d in 1..=self.dims() {
            out.push_str(&format!(",g_{d}"));
        }
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&format!("{:.16e}", self.timestamps[i]));
            for c in &self.samples {
                out.push_str(&format!(",{:.16e}", c[i]));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV layout written by [`GlimpseSequence::to_csv`]. `path` is
    /// used in error messages only.
    pub fn from_csv(text: &str, rate_hz: f64, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let header_ok = cols.len() >= 2 && cols[0] == "t" && cols[1..].iter().enumerate().all(|(d, c)| *c == format!("g_{}", d + 1));
        if !header_ok {
            return Err(err(hline + 1, format!("expected header `t,g_1,...,g_D`, found `{header}`")));
        }
        let dims = cols.len() - 1;
        let mut ts = Vec::new();
        let mut samples = vec![Vec::new(); dims];
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != dims + 1 {
                return Err(err(i + 1, format!("expected {} fields, found {}", dims + 1, fields.len())));
            }
            let mut vals = Vec::with_capacity(dims + 1);
            for f in &fields {
                let v: f64 = f.parse().map_err(|_| err(i + 1, format!("not a number: `{f}`")))?;
                if !v.is_finite() {
                    return Err(err(i + 1, format!("non-finite value `{f}`")));
                }
                vals.push(v);
            }
            if let Some(&prev) = ts.last() {
                if vals[0] <= prev {
                    return Err(err(i + 1, "timestamps must be strictly increasing".into()));
                }
            }
            ts.push(vals[0]);
            for (s, v) in samples.iter_mut().zip(&vals[1..]) {
                s.push(*v);
            }
        }
        if ts.is_empty() {
            return Err(Error::InsufficientData { what: "glimpse file", got: 0, need: 1 });
        }
        Self::new(samples, rate_hz, ts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let g =
            GlimpseSequence::new(vec![vec![0.1, -2.5e-7, 3.0], vec![1.0 / 3.0, 0.0, -1.0]], 100.0, vec![0.0, 0.0100001, 0.0301]).unwrap();
        let text = g.to_csv();
        assert!(text.starts_with("t,g_1,g_2\n"));
        let back = GlimpseSequence::from_csv(&text, 100.0, Path::new("x.csv")).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = "t,g_1\n0.0,1.0\n0.01,abc\n";
        match GlimpseSequence::from_csv(text, 100.0, Path::new("f.csv")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(GlimpseSequence::from_csv("t,x\n0,1\n", 100.0, Path::new("f")).is_err());
    }

    #[test]
    fn gaps_are_filled() {
        let g = GlimpseSequence::new(vec![vec![0.0, 1.0, 4.0]], 10.0, vec![0.0, 0.1, 0.4]).unwrap();
        let r = g.regularized();
        assert_eq!(r[0].len(), 5);
        assert!((r[0][2] - 2.0).abs() < 1e-12 && (r[0][3] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonmonotone_time() {
        assert!(GlimpseSequence::new(vec![vec![0.0, 1.0]], 10.0, vec![0.1, 0.1]).is_err());
    }
}
