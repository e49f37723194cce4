//! CSV/JSON writers. Files are written to a temporary sibling and renamed
//! into place, so a failed run never leaves a partial output behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::CliError;

/// Traceability stamp embedded in every output.
pub struct Provenance<'a> {
    pub subcommand: &'a str,
    pub config_hash: &'a str,
    pub base_seed: Option<u64>,
    pub effective_config: &'a Value,
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

/// Numeric CSV table with a mandatory header row.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(prov: &Provenance<'_>, header: &[&str]) -> Self {
        let mut text = String::new();
        let seed = prov.base_seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        writeln!(text, "# config_hash={} base_seed={seed}", prov.config_hash).unwrap();
        text.push_str(&header.join(","));
        text.push('\n');
        Self {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes the main output and its `<out>.meta.json` sidecar.
pub fn emit(out: &Path, body: &str, prov: &Provenance<'_>) -> Result<(), CliError> {
    let meta = json!({
        "subcommand": prov.subcommand,
        "config_hash": prov.config_hash,
        "base_seed": prov.base_seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config": prov.effective_config,
    });
    let mut meta_text = serde_json::to_string_pretty(&meta).expect("JSON values always serialize");
    meta_text.push('\n');
    write_atomic(out, body.as_bytes())?;
    write_atomic(&meta_path(out), meta_text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1e-5, 1.0 / 3.0, 123456789.0, 2.5e300, -0.0] {
            let s = float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(float(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_layout() {
        let cfg = json!({});
        let prov = Provenance {
            subcommand: "pod",
            config_hash: "abc",
            base_seed: Some(7),
            effective_config: &cfg,
        };
        let mut csv = Csv::new(&prov, &["a", "b"]);
        csv.row(&[float(0.5), "3".into()]);
        assert_eq!(csv.into_string(), "# config_hash=abc base_seed=7\na,b\n0.5,3\n");
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(meta_path(Path::new("out/pod.csv")), PathBuf::from("out/pod.csv.meta.json"));
    }
}
