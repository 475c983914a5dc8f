//! Butterworth IIR design and cascaded second-order-section filtering.
//!
//! Designs go through the analog prototype, the matching frequency
//! transformation, and the bilinear transform (with pre-warped edges). Every
//! design is realized as a cascade of biquads with `a0 = 1`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One second-order section, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Transfer function value at `f` cycles/sample.
    pub fn response(&self, f: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * f);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }

    /// Largest pole magnitude of the section.
    pub fn pole_radius(&self) -> f64 {
        // z^2 + a1 z + a2 = 0
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc < 0.0 {
            self.a2.abs().sqrt()
        } else {
            let r = disc.sqrt();
            ((-self.a1 + r) / 2.0).abs().max(((-self.a1 - r) / 2.0).abs())
        }
    }

    fn scaled(mut self, g: f64) -> Self {
        self.b0 *= g;
        self.b1 *= g;
        self.b2 *= g;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    LowPass,
    HighPass,
    BandPass,
    BandStop,
}

/// A cascade of biquads together with the normalized edges it was designed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IirFilter {
    pub kind: FilterKind,
    pub sections: Vec<Biquad>,
    /// Normalized edges in cycles/sample. Single-edge designs repeat the cutoff.
    pub edges: (f64, f64),
}

/// Running state of a cascade, for sample-by-sample use.
#[derive(Debug, Clone)]
pub struct FilterState {
    sections: Vec<Biquad>,
    z: Vec<[f64; 2]>,
}

impl FilterState {
    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let mut v = x;
        for (s, z) in self.sections.iter().zip(self.z.iter_mut()) {
            let y = s.b0 * v + z[0];
            z[0] = s.b1 * v - s.a1 * y + z[1];
            z[1] = s.b2 * v - s.a2 * y;
            v = y;
        }
        v
    }
}

impl IirFilter {
    pub fn response(&self, f: f64) -> Complex64 {
        self.sections.iter().map(|s| s.response(f)).product()
    }

    pub fn magnitude(&self, f: f64) -> f64 {
        self.response(f).norm()
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(|s| s.pole_radius() < 1.0)
    }

    /// Fresh zero-state runner.
    pub fn state(&self) -> FilterState {
        FilterState { sections: self.sections.clone(), z: vec![[0.0; 2]; self.sections.len()] }
    }

    /// Causal, zero-initial-state filtering; output has the input's length.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut st = self.state();
        x.iter().map(|&v| st.process(v)).collect()
    }
}

/// Free-function form of [`IirFilter::apply`].
pub fn apply_filter(filter: &IirFilter, x: &[f64]) -> Vec<f64> {
    filter.apply(x)
}

fn check_band(low: f64, high: f64) -> Result<()> {
    let reason = if !(low.is_finite() && high.is_finite()) {
        "edges must be finite"
    } else if low <= 0.0 {
        "low edge must be above 0"
    } else if high >= 0.5 {
        "high edge must be below Nyquist (0.5 cycles/sample)"
    } else if low >= high {
        "low edge must be below high edge"
    } else {
        return Ok(());
    };
    Err(Error::BandEdge { low, high, reason })
}

fn check_cutoff(fc: f64) -> Result<()> {
    if fc.is_finite() && fc > 0.0 && fc < 0.5 {
        Ok(())
    } else {
        Err(Error::BandEdge { low: fc, high: fc, reason: "cutoff must lie in (0, 0.5) cycles/sample" })
    }
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::invalid("filter order must be at least 1"));
    }
    Ok(())
}

/// Pre-warped analog angular frequency for a digital edge (bilinear, T = 1).
fn warp(f: f64) -> f64 {
    2.0 * (PI * f).tan()
}

/// Analog Butterworth prototype poles with non-negative imaginary part.
fn prototype_upper_poles(order: usize) -> Vec<Complex64> {
    let n = order as f64;
    (0..order)
        .map(|k| Complex64::from_polar(1.0, PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n)))
        .filter(|p| p.im >= -1e-12)
        .map(|p| if p.im.abs() < 1e-12 { Complex64::new(p.re, 0.0) } else { p })
        .collect()
}

fn bilinear(s: Complex64) -> Complex64 {
    (2.0 + s) / (2.0 - s)
}

/// Denominator (a1, a2) for a digital pole and its conjugate.
fn conj_pair_denominator(z: Complex64) -> (f64, f64) {
    (-2.0 * z.re, z.norm_sqr())
}

/// Denominator for two real poles.
fn real_pair_denominator(z1: f64, z2: f64) -> (f64, f64) {
    (-(z1 + z2), z1 * z2)
}

/// Splits an analog quadratic's roots into one or two sections' worth of
/// denominators. Roots come from `s^2 + c1 s + c0 = 0` with complex coefficients
/// produced by the band transforms; the caller passes the two roots directly.
fn denominators_for_roots(roots: [Complex64; 2], from_real_prototype: bool) -> Vec<(f64, f64)> {
    if from_real_prototype {
        // Roots of a real quadratic: a conjugate pair or two real roots.
        let z1 = bilinear(roots[0]);
        let z2 = bilinear(roots[1]);
        if roots[0].im.abs() > 1e-12 {
            vec![conj_pair_denominator(z1)]
        } else {
            vec![real_pair_denominator(z1.re, z2.re)]
        }
    } else {
        roots.iter().map(|&s| conj_pair_denominator(bilinear(s))).collect()
    }
}

fn quadratic_roots(b: Complex64, c: Complex64) -> [Complex64; 2] {
    // s^2 + b s + c = 0
    let disc = (b * b - 4.0 * c).sqrt();
    [(-b + disc) / 2.0, (-b - disc) / 2.0]
}

fn normalize_at(mut sections: Vec<Biquad>, f: f64) -> Vec<Biquad> {
    for s in &mut sections {
        let g = s.response(f).norm();
        *s = s.scaled(1.0 / g);
    }
    sections
}

/// Butterworth band-pass over `[low, high]` cycles/sample.
///
/// `order` is the low-pass prototype order; the band-pass has `2 * order`
/// poles realized as `order` biquads, each with zeros at DC and Nyquist.
pub fn design_bandpass(order: usize, low: f64, high: f64) -> Result<IirFilter> {
    check_order(order)?;
    check_band(low, high)?;
    let (wl, wh) = (warp(low), warp(high));
    let w0sq = wl * wh;
    let bw = wh - wl;
    let mut sections = Vec::with_capacity(order);
    for p in prototype_upper_poles(order) {
        // s^2 - p*bw*s + w0^2 = 0
        let roots = quadratic_roots(-p * bw, Complex64::new(w0sq, 0.0));
        for (a1, a2) in denominators_for_roots(roots, p.im == 0.0) {
            sections.push(Biquad { b0: 1.0, b1: 0.0, b2: -1.0, a1, a2 });
        }
    }
    let center = (w0sq.sqrt() / 2.0).atan() / PI;
    Ok(IirFilter { kind: FilterKind::BandPass, sections: normalize_at(sections, center), edges: (low, high) })
}

/// Butterworth band-stop over `[low, high]` cycles/sample; same order convention
/// as [`design_bandpass`].
pub fn design_bandstop(order: usize, low: f64, high: f64) -> Result<IirFilter> {
    check_order(order)?;
    check_band(low, high)?;
    let (wl, wh) = (warp(low), warp(high));
    let w0sq = wl * wh;
    let bw = wh - wl;
    let notch = 2.0 * (w0sq.sqrt() / 2.0).atan();
    let mut sections = Vec::with_capacity(order);
    for p in prototype_upper_poles(order) {
        // p s^2 - bw s + p w0^2 = 0  =>  s^2 - (bw/p) s + w0^2 = 0
        let roots = quadratic_roots(-(bw / p), Complex64::new(w0sq, 0.0));
        for (a1, a2) in denominators_for_roots(roots, p.im == 0.0) {
            sections.push(Biquad { b0: 1.0, b1: -2.0 * notch.cos(), b2: 1.0, a1, a2 });
        }
    }
    Ok(IirFilter { kind: FilterKind::BandStop, sections: normalize_at(sections, 0.0), edges: (low, high) })
}

/// Butterworth high-pass with cutoff `fc` cycles/sample.
pub fn design_highpass(order: usize, fc: f64) -> Result<IirFilter> {
    check_order(order)?;
    check_cutoff(fc)?;
    let wc = warp(fc);
    let sections = prototype_upper_poles(order)
        .into_iter()
        .map(|p| {
            let z = bilinear(wc / p);
            if p.im == 0.0 {
                Biquad { b0: 1.0, b1: -1.0, b2: 0.0, a1: -z.re, a2: 0.0 }
            } else {
                let (a1, a2) = conj_pair_denominator(z);
                Biquad { b0: 1.0, b1: -2.0, b2: 1.0, a1, a2 }
            }
        })
        .collect();
    Ok(IirFilter { kind: FilterKind::HighPass, sections: normalize_at(sections, 0.5), edges: (fc, fc) })
}

/// Butterworth low-pass with cutoff `fc` cycles/sample.
pub fn design_lowpass(order: usize, fc: f64) -> Result<IirFilter> {
    check_order(order)?;
    check_cutoff(fc)?;
    let wc = warp(fc);
    let sections = prototype_upper_poles(order)
        .into_iter()
        .map(|p| {
            let z = bilinear(wc * p);
            if p.im == 0.0 {
                Biquad { b0: 1.0, b1: 1.0, b2: 0.0, a1: -z.re, a2: 0.0 }
            } else {
                let (a1, a2) = conj_pair_denominator(z);
                Biquad { b0: 1.0, b1: 2.0, b2: 1.0, a1, a2 }
            }
        })
        .collect();
    Ok(IirFilter { kind: FilterKind::LowPass, sections: normalize_at(sections, 0.0), edges: (fc, fc) })
}
