//! Comparison watermarks with matched generators and detectors.

pub mod correlation;
pub mod multisine;
pub mod tournament;

pub use correlation::{correlation_detect, correlation_generate, CorrelationKey};
pub use multisine::{multisine_detect, multisine_generate, MultiSineKey};
pub use tournament::{tournament_act, tournament_detect, ActionProxy, TournamentKey};
