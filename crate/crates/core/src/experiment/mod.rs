//! File-driven experiments: validated configs, atomic outputs with embedded
//! provenance, and the simulate and experiment runners.

pub mod config;
pub mod io;
pub mod presets;
pub mod run;

pub use config::{config_schema, parse_json, ExperimentConfig, ExperimentKind};
pub use io::{read_glimpses, write_atomic, GlimpseSidecar};
pub use run::{resolve_output_dir, run_experiment, simulate};
