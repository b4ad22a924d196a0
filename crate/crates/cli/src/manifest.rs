//! The manifest records everything needed to repeat a run: the effective
//! configuration (seed included), versions and the files produced. Only the
//! manifest carries a timestamp, so data files compare byte for byte.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::{CliError, RunConfig, Summary};

#[derive(Serialize)]
struct Manifest<'a> {
    run_id: String,
    tool_version: &'static str,
    core_version: &'static str,
    /// Replica i of an ensemble draws from ChaCha8 stream i keyed by `seed`.
    seed_scheme: &'static str,
    seed: u64,
    started_unix: f64,
    outputs: &'a [String],
    config: &'a RunConfig,
}

/// FNV-1a of the canonical configuration; identifies runs with equal inputs.
fn run_id(cfg: &RunConfig) -> String {
    let text = serde_json::to_string(cfg).expect("configuration serialises");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

pub fn write(out: &Path, cfg: &RunConfig, summary: &Summary, started: SystemTime) -> Result<(), CliError> {
    let summary_json = serde_json::to_string_pretty(summary).expect("summary serialises");
    std::fs::write(out.join("summary.json"), summary_json + "\n")?;
    let m = Manifest {
        run_id: run_id(cfg),
        tool_version: env!("CARGO_PKG_VERSION"),
        core_version: epsb::VERSION,
        seed_scheme: "chacha8-stream-per-replica",
        seed: cfg.seed,
        started_unix: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        outputs: &summary.files,
        config: cfg,
    };
    let text = serde_json::to_string_pretty(&m).expect("manifest serialises");
    std::fs::write(out.join("manifest.json"), text + "\n")?;
    Ok(())
}
