use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use conoco::detect::{detect, detect_with_offset, DetectionConfig, DEFAULT_GRID_POINTS};
use conoco::experiment::{self, presets, read_glimpses, write_atomic, ExperimentConfig};
use conoco::watermark::{PolicyRateBounds, SecretKey};
use conoco::{Error, Result};

/// Environment variable naming the default output directory.
const OUTPUT_ENV: &str = "CONOCO_OUTPUT_DIR";
const FALLBACK_OUTPUT: &str = "conoco-out";

#[derive(Parser)]
#[command(name = "conoco", version, about = "Colored-noise policy watermarks: keys, simulation, detection and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a secret key file.
    Keygen {
        /// Destination key file.
        #[arg(long)]
        out: PathBuf,
        /// Band edges in Hz.
        #[arg(long, num_args = 2, value_names = ["LOW", "HIGH"], allow_negative_numbers = true)]
        band: Vec<f64>,
        /// Owner seed; drawn from OS entropy when absent.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate both arms of every replication and write glimpse files.
    Simulate {
        config: PathBuf,
        /// Output directory (overrides the config and the environment).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a glimpse file against a key and print the report as JSON.
    Detect {
        glimpses: PathBuf,
        #[arg(long)]
        key: PathBuf,
        /// Lower policy rate bound in Hz.
        #[arg(long)]
        f_lb: f64,
        /// Upper policy rate bound in Hz.
        #[arg(long)]
        f_ub: f64,
        /// Glimpse rate in Hz; read from the sidecar or timestamps when absent.
        #[arg(long)]
        rate_hz: Option<f64>,
        /// Search for an unknown start offset.
        #[arg(long)]
        offset_handling: bool,
        /// Largest offset searched, seconds; 90% of the glimpse duration when absent.
        #[arg(long)]
        max_offset_s: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid_points: usize,
        #[arg(long)]
        win_len: Option<usize>,
        /// Exit with status 1 when the score falls below this value.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Run an experiment config and write its tables.
    Experiment {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the JSON schema of experiment configs.
    Schema,
    /// Print a named experiment config template.
    Preset { name: String },
}

fn default_out() -> PathBuf {
    std::env::var_os(OUTPUT_ENV).map_or_else(|| PathBuf::from(FALLBACK_OUTPUT), PathBuf::from)
}

fn emit(text: &str) {
    // a closed pipe downstream is not an error
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_json(v: &impl serde::Serialize) {
    emit(&serde_json::to_string_pretty(v).expect("output serializes"));
}

fn keygen(out: &Path, band: &[f64], seed: Option<u64>) -> Result<()> {
    let seed = match seed {
        Some(s) => s,
        None => {
            let mut b = [0u8; 8];
            getrandom::fill(&mut b).map_err(|e| Error::Invariant(format!("OS entropy unavailable: {e}")))?;
            u64::from_le_bytes(b)
        }
    };
    let key = SecretKey::new(seed, [band[0], band[1]])?;
    write_atomic(out, format!("{}\n", key.to_json()).as_bytes())?;
    emit(&seed.to_string());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn detect_cmd(
    glimpses: &Path,
    key: &Path,
    bounds: PolicyRateBounds,
    rate_hz: Option<f64>,
    offset_handling: bool,
    max_offset_s: Option<f64>,
    grid_points: usize,
    win_len: Option<usize>,
    threshold: Option<f64>,
) -> Result<ExitCode> {
    let key_text = std::fs::read_to_string(key).map_err(|e| Error::io(key, e))?;
    let key = SecretKey::from_json(&key_text)?;
    let g = read_glimpses(glimpses, rate_hz)?;
    if grid_points == 0 {
        return Err(Error::Config("grid needs at least one point".into()));
    }
    let mut cfg = DetectionConfig::new(&bounds, grid_points);
    cfg.win_len = win_len;
    cfg.validate(&bounds)?;
    let report = if offset_handling {
        let max = max_offset_s.unwrap_or(0.9 * g.len().saturating_sub(1) as f64 / g.rate_hz);
        detect_with_offset(&g, &key, &bounds, &cfg.with_max_offset(max))?
    } else {
        detect(&g, &key, &bounds, &cfg)?
    };
    print_json(&report);
    Ok(match threshold {
        Some(t) if report.score < t => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Keygen { out, band, seed } => keygen(&out, &band, seed)?,
        Command::Simulate { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = experiment::resolve_output_dir(out.as_deref(), &cfg, default_out());
            let summary = experiment::simulate(&cfg, &dir)?;
            eprintln!("wrote {} runs to {}", summary["runs"].as_array().map_or(0, Vec::len), dir.display());
        }
        Command::Detect { glimpses, key, f_lb, f_ub, rate_hz, offset_handling, max_offset_s, grid_points, win_len, threshold } => {
            let bounds = PolicyRateBounds::new(f_lb, f_ub)?;
            return detect_cmd(&glimpses, &key, bounds, rate_hz, offset_handling, max_offset_s, grid_points, win_len, threshold);
        }
        Command::Experiment { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = experiment::resolve_output_dir(out.as_deref(), &cfg, default_out());
            let mut summary = experiment::run_experiment(&cfg, &dir)?;
            if let Some(obj) = summary.as_object_mut() {
                obj.remove("config");
            }
            print_json(&summary);
        }
        Command::Schema => emit(&experiment::config_schema()),
        Command::Preset { name } => print_json(&presets::preset(&name)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
