use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::glimpse::GlimpseSequence;

/// Writes `bytes` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// `# <json>` provenance line followed by `body`.
pub fn csv_with_provenance<C: Serialize>(config: &C, body: &str) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    format!("# {json}\n{body}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Metadata stored next to a glimpse CSV.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct GlimpseSidecar<C> {
    pub rate_hz: f64,
    pub scenario: String,
    pub watermarked: bool,
    #[serde(default)]
    pub key_id: Option<String>,
    pub sensor: serde_json::Value,
    pub config: C,
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_glimpses<C: Serialize + Clone>(
    dir: &Path,
    stem: &str,
    g: &GlimpseSequence,
    sensor: serde_json::Value,
    config: &C,
) -> Result<()> {
    write_atomic(&dir.join(format!("{stem}.csv")), g.to_csv().as_bytes())?;
    let side = GlimpseSidecar {
        rate_hz: g.rate_hz,
        scenario: g.provenance.scenario.clone(),
        watermarked: g.provenance.watermarked,
        key_id: g.provenance.key_id.clone(),
        sensor,
        config: config.clone(),
    };
    write_json(&dir.join(format!("{stem}.json")), &side)
}

/// Reads a glimpse CSV. The rate comes from `rate_hz`, else from a sidecar
/// `<stem>.json`, else from the median timestamp spacing.
pub fn read_glimpses(path: &Path, rate_hz: Option<f64>) -> Result<GlimpseSequence> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let side = path.with_extension("json");
    let rate = match rate_hz {
        Some(r) => r,
        None if side.exists() => {
            let s = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
            let v: serde_json::Value =
                serde_json::from_str(&s).map_err(|e| Error::Parse { path: side.clone(), line: e.line(), message: e.to_string() })?;
            v["rate_hz"].as_f64().ok_or_else(|| Error::Parse {
                path: side.clone(),
                line: 1,
                message: "sidecar lacks a numeric rate_hz".into(),
            })?
        }
        None => {
            // parse once with a placeholder rate to read timestamps
            let g = GlimpseSequence::from_csv(&text, 1.0, path)?;
            let mut d: Vec<f64> = g.timestamps.windows(2).map(|w| w[1] - w[0]).collect();
            if d.is_empty() {
                return Err(Error::InsufficientData { what: "glimpse file", got: g.len(), need: 2 });
            }
            d.sort_by(f64::total_cmp);
            1.0 / d[d.len() / 2]
        }
    };
    GlimpseSequence::from_csv(&text, rate, path)
}
