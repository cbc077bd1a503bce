//! Report and curve files. Every run writes `report.json` with the full
//! resolved configuration; the `timestamp` field is the only part that
//! varies between identically seeded runs.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::config::Resolved;

#[derive(Serialize)]
struct Report<'a> {
    kind: &'static str,
    config: ConfigEcho<'a>,
    results: &'a Value,
    timestamp: Timestamp,
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    seed: u64,
    paths: PathsEcho,
    parameters: &'a Value,
}

#[derive(Serialize)]
struct PathsEcho {
    input: Option<String>,
    output: String,
}

#[derive(Serialize)]
struct Timestamp {
    completed_unix_seconds: u64,
    wall_time_seconds: f64,
}

/// Writes `report.json` under the resolved output directory and returns its
/// path.
pub fn write_report<P: Serialize>(
    resolved: &Resolved<P>,
    results: &Value,
    started: Instant,
) -> std::io::Result<PathBuf> {
    let parameters = serde_json::to_value(&resolved.parameters)
        .expect("parameter structs serialize to plain JSON");
    let report = Report {
        kind: resolved.kind,
        config: ConfigEcho {
            seed: resolved.seed,
            paths: PathsEcho {
                input: resolved.input.as_ref().map(|p| p.display().to_string()),
                output: resolved.out_dir.display().to_string(),
            },
            parameters: &parameters,
        },
        results,
        timestamp: Timestamp {
            completed_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_time_seconds: started.elapsed().as_secs_f64(),
        },
    };
    let path = resolved.out_dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Writes a header line and one line per row.
pub fn write_csv(
    path: &Path,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    Ok(())
}
