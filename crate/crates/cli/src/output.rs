//! Output files: CSV tables, JSON summaries and the run manifest.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// A file produced by an experiment, held in memory until the run succeeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl OutputFile {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            bytes,
        }
    }

    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> Self {
        let mut bytes = serde_json::to_vec_pretty(value).expect("summary serializes");
        bytes.push(b'\n');
        Self::new(name, bytes)
    }

    pub fn sha256(&self) -> String {
        Sha256::digest(&self.bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Floats with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with LF line endings.
pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    /// Effective configuration in its file form.
    pub config: String,
    pub threads: usize,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn entries(files: &[OutputFile]) -> Vec<ManifestEntry> {
        files
            .iter()
            .map(|f| ManifestEntry {
                file: f.name.clone(),
                bytes: f.bytes.len(),
                sha256: f.sha256(),
            })
            .collect()
    }
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Writes every file and then the manifest into `dir`.
pub fn write_outputs(dir: &Path, files: &[OutputFile], manifest: &RunManifest) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let manifest = OutputFile::json(MANIFEST_NAME, manifest);
    for f in files.iter().chain(std::iter::once(&manifest)) {
        let path = dir.join(&f.name);
        fs::write(&path, &f.bytes).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_f64(0.375), "3.7500000000000000e-1");
        assert_eq!(fmt_f64(-1e-300), "-1.0000000000000000e-300");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_uses_lf() {
        let b = csv_bytes(&["a", "b"], vec![vec!["1".into(), "2".into()]]);
        assert_eq!(b, b"a,b\n1,2\n");
    }

    #[test]
    fn checksum_of_empty_file() {
        assert_eq!(
            OutputFile::new("x", vec![]).sha256(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
