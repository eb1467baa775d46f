use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use finicode_core::coder::{Window, UNKNOWN};
use finicode_core::Symbol;
use serde::Serialize;

use crate::config::{ExperimentConfig, Format, SCHEMA_VERSION};
use crate::error::CliError;

/// Binary windows store one little-endian `u16` per symbol; this value is unknown.
pub const BINARY_UNKNOWN: u16 = u16::MAX;

/// Reads a window: JSON (a window, a coded window, or an `encode`/`decode` report),
/// little-endian `u16` binary (`.bin`), or CSV symbol ids with `?` for unknown.
pub fn read_window(path: &Path, lo: Option<i64>) -> Result<Window, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| bad(e.to_string()))?;
            if let Some(ids) = value.as_array() {
                let symbols = ids.iter().map(json_symbol).collect::<Result<_, _>>().map_err(bad)?;
                return Ok(Window::new(lo.unwrap_or(0), symbols));
            }
            let window = ["/result/coded/output", "/output", ""]
                .iter()
                .find_map(|ptr| value.pointer(ptr).filter(|v| v.get("symbols").is_some()))
                .ok_or_else(|| bad("no window found".into()))?;
            let symbols = window["symbols"].as_array().ok_or_else(|| bad("`symbols` is not an array".into()))?;
            let symbols = symbols.iter().map(json_symbol).collect::<Result<_, _>>().map_err(bad)?;
            let start = window.get("lo").and_then(|v| v.as_i64()).unwrap_or(0);
            Ok(Window::new(lo.unwrap_or(start), symbols))
        }
        Some("bin") => {
            if bytes.len() % 2 != 0 {
                return Err(bad("odd number of bytes in a u16 window".into()));
            }
            let symbols = bytes
                .chunks_exact(2)
                .map(|c| match u16::from_le_bytes([c[0], c[1]]) {
                    BINARY_UNKNOWN => UNKNOWN,
                    s => Symbol::from(s),
                })
                .collect();
            Ok(Window::new(lo.unwrap_or(0), symbols))
        }
        _ => read_csv_window(&bytes, lo).map_err(bad),
    }
}

/// A JSON symbol id; `null` or `"?"` is unknown.
fn json_symbol(v: &serde_json::Value) -> Result<Symbol, String> {
    match v {
        serde_json::Value::Null => Ok(UNKNOWN),
        serde_json::Value::String(s) if s == "?" => Ok(UNKNOWN),
        v => v.as_u64().and_then(|x| Symbol::try_from(x).ok()).ok_or_else(|| format!("bad symbol {v}")),
    }
}

fn read_csv_window(bytes: &[u8], lo: Option<i64>) -> Result<Window, String> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(bytes);
    let records: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let parse = |field: &str| -> Result<Symbol, String> {
        match field {
            "?" => Ok(UNKNOWN),
            s => s.parse::<Symbol>().map_err(|_| format!("bad symbol {s:?}")),
        }
    };
    // the table written by `encode --format csv`
    if let Some(header) = records.first().filter(|r| r.get(0) == Some("position")) {
        let col = header.iter().position(|h| h == "output").ok_or("table without an output column")?;
        let rows = &records[1..];
        let first = rows.first().ok_or("empty table")?;
        let start: i64 = first[0].parse().map_err(|_| "bad position")?;
        let symbols = rows.iter().map(|r| parse(r.get(col).unwrap_or(""))).collect::<Result<_, _>>()?;
        return Ok(Window::new(lo.unwrap_or(start), symbols));
    }
    let symbols =
        records.iter().flat_map(|r| r.iter()).filter(|f| !f.is_empty()).map(parse).collect::<Result<_, _>>()?;
    Ok(Window::new(lo.unwrap_or(0), symbols))
}

/// A command's result, in JSON and as CSV rows.
pub trait Report: Serialize {
    fn write_csv<W: Write>(&self, out: &mut csv::Writer<W>) -> Result<(), CliError>;
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema_version: u32,
    command: &'a str,
    version: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix: Option<u64>,
    config: &'a ExperimentConfig,
    result: &'a T,
}

pub struct Emitter<'a> {
    pub command: &'a str,
    pub config: &'a ExperimentConfig,
    pub reproducible: bool,
}

impl Emitter<'_> {
    pub fn emit<T: Report>(&self, result: &T) -> Result<(), CliError> {
        let bytes = match self.config.format.unwrap_or_default() {
            Format::Json => {
                let generated_at_unix = (!self.reproducible)
                    .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
                let config = self.config.used_by(self.command);
                let envelope = Envelope {
                    schema_version: SCHEMA_VERSION,
                    command: self.command,
                    version: env!("CARGO_PKG_VERSION"),
                    generated_at_unix,
                    config: &config,
                    result,
                };
                let mut v = serde_json::to_vec_pretty(&envelope)?;
                v.push(b'\n');
                v
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                result.write_csv(&mut w)?;
                w.into_inner().map_err(|e| CliError::Output(e.to_string()))?
            }
        };
        match &self.config.output {
            Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
            None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::Output(e.to_string())),
        }
    }
}
