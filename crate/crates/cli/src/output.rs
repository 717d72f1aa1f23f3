use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::CliResult;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub code_version: &'static str,
    /// Only set when SOURCE_DATE_EPOCH is present, so reruns stay identical.
    pub timestamp: Option<String>,
    pub seed: u64,
}

impl Provenance {
    pub fn new(seed: u64) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.trim().parse::<i64>().ok())
            .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0))
            .map(|t| t.to_rfc3339());
        Self {
            code_version: env!("CARGO_PKG_VERSION"),
            timestamp,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub provenance: Provenance,
    pub payload: Value,
    pub warnings: Vec<String>,
}

/// Output of one subcommand before it is written.
pub struct Report {
    pub payload: Value,
    pub warnings: Vec<String>,
    pub csv: Option<String>,
}

impl Report {
    pub fn json(payload: Value, warnings: Vec<String>) -> Self {
        Self {
            payload,
            warnings,
            csv: None,
        }
    }
}

/// Shortest round-trip representation is not fixed-width; tables use 17
/// significant digits instead.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

fn envelope_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".envelope.json");
    PathBuf::from(s)
}

/// Emits the envelope (and the CSV table, if any). With `out` the CSV goes to
/// that path and the envelope beside it; JSON-only results go to `out`
/// directly. Without `out` everything is printed on stdout.
pub fn emit(mut env: Envelope, csv: Option<String>, out: Option<&Path>) -> CliResult<()> {
    match (out, csv) {
        (Some(path), Some(table)) => {
            let file = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            set_csv(&mut env.payload, Value::String(file));
            let text = to_text(&env);
            write_atomic(path, table.as_bytes())?;
            write_atomic(&envelope_path(path), text.as_bytes())
        }
        (Some(path), None) => write_atomic(path, to_text(&env).as_bytes()),
        (None, table) => {
            if let Some(t) = table {
                set_csv(&mut env.payload, Value::String(t));
            }
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(to_text(&env).as_bytes())?;
            Ok(())
        }
    }
}

fn set_csv(payload: &mut Value, v: Value) {
    if let Value::Object(map) = payload {
        map.insert("csv".into(), v);
    }
}

fn to_text(env: &Envelope) -> String {
    let mut s = serde_json::to_string_pretty(env).expect("envelope serialises");
    s.push('\n');
    s
}
