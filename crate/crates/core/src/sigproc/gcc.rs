//! Generalized cross-correlation with phase transform (GCC-PHAT).

use rustfft::num_complex::Complex64;

use super::fft;
use crate::error::{Error, Result};

/// Band-restricted GCC-PHAT curve for lags `-max_lag..=max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct GccCurve {
    pub max_lag: usize,
    /// `values[i]` belongs to lag `i as isize - max_lag as isize`.
    pub values: Vec<f64>,
}

impl GccCurve {
    pub fn lags(&self) -> impl Iterator<Item = isize> + '_ {
        let m = self.max_lag as isize;
        -m..=m
    }

    pub fn at(&self, lag: isize) -> f64 {
        self.values[(lag + self.max_lag as isize) as usize]
    }

    /// Lag of the largest value; ties go to the smallest lag.
    pub fn argmax(&self) -> isize {
        argmax_first(&self.values) as isize - self.max_lag as isize
    }

    pub fn add_assign(&mut self, other: &GccCurve) {
        assert_eq!(self.max_lag, other.max_lag, "curves must share lag range");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }
}

pub(crate) fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// GCC-PHAT of `y` against `x`: the curve peaks at lag `L` when
/// `y[n] ≈ h * x[n - L]` for an LTI `h`.
///
/// The cross-spectrum `conj(X) Y` is whitened to unit magnitude and zeroed
/// outside `band` (Hz, matched on |f|) before the inverse transform.
pub fn gcc_phat(x: &[f64], y: &[f64], fs: f64, band: (f64, f64), max_lag: usize) -> Result<GccCurve> {
    let shortest = x.len().min(y.len());
    if max_lag >= shortest {
        return Err(Error::InsufficientData { what: "GCC-PHAT input", got: shortest, need: max_lag + 1 });
    }
    if !(fs > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let n = (x.len() + y.len()).next_power_of_two();
    let xf = fft::real_forward(x, n);
    let yf = fft::real_forward(y, n);
    let mut r: Vec<Complex64> = xf
        .iter()
        .zip(&yf)
        .enumerate()
        .map(|(k, (a, b))| {
            let kk = k.min(n - k);
            let f = kk as f64 * fs / n as f64;
            if f < band.0 || f > band.1 {
                return Complex64::new(0.0, 0.0);
            }
            let c = a.conj() * b;
            let m = c.norm();
            if m > 1e-300 {
                c / m
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    fft::inverse_in_place(&mut r);
    let scale = 1.0 / n as f64;
    let values = (-(max_lag as isize)..=max_lag as isize).map(|lag| r[lag.rem_euclid(n as isize) as usize].re * scale).collect();
    Ok(GccCurve { max_lag, values })
}
