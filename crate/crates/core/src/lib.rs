//! Colored-noise watermarking for stochastic control policies, with
//! spectral-coherency detection from remote glimpses, comparison baselines, a
//! synthetic plant simulator, and an evaluation harness.

pub mod baselines;
pub mod detect;
pub mod error;
pub mod experiment;
pub mod glimpse;
pub mod harness;
pub mod sigproc;
pub mod simworld;
pub mod watermark;

pub use error::{Error, Result};
