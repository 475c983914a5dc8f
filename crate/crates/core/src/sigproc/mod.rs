//! Deterministic DSP primitives shared by the watermark, detectors, and
//! simulator.

pub(crate) mod fft;
pub mod filter;
pub mod gcc;
pub mod resample;
pub mod rng;
pub mod spectral;

pub use filter::{apply_filter, design_bandpass, design_bandstop, design_highpass, design_lowpass, Biquad, IirFilter};
pub use gcc::{gcc_phat, GccCurve};
pub use resample::{best_rational, resample_rational, Resampler};
pub use rng::{gaussian_stream, mix_seed, splitmix64, GaussianStream, Xoshiro256};
pub use spectral::{band_mean, band_power, coherency, welch_psd, welch_spectra, CoherencyCurve, SpectralEstimate, Taper, Welch};
