//! Run manifests: tool version, config hash, seeds and per-file checksums.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use loadforge_core::simulate::{BuildingSpec, GroundTruth};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the directory holding the manifest.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryEntry {
    pub id: String,
    pub class: String,
    pub devices: usize,
    pub components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingEntry {
    pub name: String,
    pub seed: u64,
    pub ground_truth: String,
    pub start: f64,
    pub span_s: f64,
    pub cadence_s: f64,
    pub periods: usize,
    pub samples_per_period: usize,
    pub voltage_rms: f64,
    pub frequency_hz: f64,
    pub noise_std: Option<f64>,
    pub categories: Vec<CategoryEntry>,
}

impl BuildingEntry {
    pub fn new(spec: &BuildingSpec, seed: u64, noise_std: Option<f64>) -> Self {
        let s = &spec.settings;
        Self {
            name: spec.name.clone(),
            seed,
            ground_truth: match spec.ground_truth {
                GroundTruth::Power => "power",
                GroundTruth::Current => "current",
            }
            .into(),
            start: s.start,
            span_s: s.span,
            cadence_s: s.cadence,
            periods: s.timeline().periods,
            samples_per_period: s.samples_per_period,
            voltage_rms: s.mains.rms,
            frequency_hz: s.mains.hz,
            noise_std,
            categories: spec
                .categories
                .iter()
                .map(|c| CategoryEntry {
                    id: c.id.clone(),
                    class: c.class().letter().to_string(),
                    devices: c.devices.len(),
                    components: c.devices.iter().map(|d| d.components()).sum(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    pub format_version: u32,
    pub command: String,
    pub config_sha256: Option<String>,
    pub root_seed: Option<u64>,
    /// Effective command parameters, as given or defaulted.
    pub parameters: BTreeMap<String, String>,
    pub buildings: Vec<BuildingEntry>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: "loadforge".into(),
            tool_version: TOOL_VERSION.into(),
            format_version: FORMAT_VERSION,
            command: command.into(),
            config_sha256: None,
            root_seed: None,
            parameters: BTreeMap::new(),
            buildings: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }

    pub fn category_count(&self) -> usize {
        self.buildings.iter().map(|b| b.categories.len()).sum()
    }

    /// Writes the manifest as pretty JSON and returns its own file entry.
    pub fn write(&self, path: &Path) -> Result<FileEntry> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Config(format!("manifest: {e}")))?;
        text.push('\n');
        write_hashed(path, |w| w.write_all(text.as_bytes()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.line(), e.to_string()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Forwards writes and hashes everything that passes through.
struct HashingWriter<W> {
    inner: W,
    hasher: Sha256,
    bytes: u64,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Writes `path` through `body`, creating parent directories, and returns
/// the checksum entry (with the bare file name as `path`).
pub fn write_hashed(path: &Path, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<FileEntry> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = HashingWriter {
        inner: BufWriter::with_capacity(1 << 20, file),
        hasher: Sha256::new(),
        bytes: 0,
    };
    body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))?;
    Ok(FileEntry {
        path: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        sha256: hex::encode(w.hasher.finalize()),
        bytes: w.bytes,
    })
}

/// Checksum of a file on disk.
pub fn hash_file(path: &Path) -> Result<FileEntry> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(FileEntry {
        path: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

/// Re-hashes every file listed in the manifest at `path` and returns the
/// entries that no longer match.
pub fn verify(path: &Path) -> Result<Vec<String>> {
    let m = Manifest::read(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut bad = Vec::new();
    for f in &m.files {
        match hash_file(&dir.join(&f.path)) {
            Ok(e) if e.sha256 == f.sha256 && e.bytes == f.bytes => {}
            _ => bad.push(f.path.clone()),
        }
    }
    Ok(bad)
}
