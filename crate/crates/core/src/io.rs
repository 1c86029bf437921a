//! Shared file-format plumbing: atomic writes, run configuration files,
//! run manifests, and the CSV exports produced by a discovery run.
//!
//! Every artifact is written via [`atomic_write`] so a crash or error never
//! leaves a partial file behind, and every write is byte-deterministic for
//! a fixed configuration and seed. Formats that are read back (run configs,
//! manifests) round-trip losslessly: write → read → write reproduces the
//! exact bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::GenConfig;
use crate::discovery::{DiscoveryConfig, TrainingTrace};
use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Version stamp embedded in every manifest; bumped on breaking format
/// changes so stale readers fail loudly instead of misparsing.
pub const FORMAT_VERSION: u32 = 1;

/// Writes `bytes` to `path` atomically: the content goes to a sibling
/// `.tmp` file first and is renamed over the target only when fully
/// flushed.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// On-disk run configuration: a TOML file with optional `[generate]` and
/// `[discovery]` tables mirroring [`GenConfig`] and [`DiscoveryConfig`].
///
/// Unknown keys anywhere in the file are rejected, and both sections are
/// fully validated on load so a bad config fails before any work starts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub generate: Option<GenConfig>,
    pub discovery: Option<DiscoveryConfig>,
}

impl RunConfigFile {
    /// Parses and validates TOML text. `path` is only used to label errors.
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        let cfg: RunConfigFile = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(1);
            Error::parse(path, line, e.message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a TOML run configuration file.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    /// Validates every section that is present.
    pub fn validate(&self) -> Result<()> {
        if let Some(generate) = &self.generate {
            generate.validate()?;
        }
        if let Some(discovery) = &self.discovery {
            discovery.validate()?;
        }
        Ok(())
    }

    /// Renders the configuration as TOML text.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes to TOML by construction")
    }

    /// Writes the configuration as TOML, atomically.
    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_toml_string().as_bytes())
    }
}

/// Reproducibility record written next to every command's outputs: the
/// command name, the fully-resolved configuration it ran with, and the
/// files it read and wrote. Manifest plus seed determine every output
/// byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub command: String,
    /// Fully-resolved configuration the command ran with.
    pub config: serde_json::Value,
    /// Input file paths, as given on the command line.
    pub inputs: Vec<String>,
    /// Output file names, relative to the manifest's directory.
    pub outputs: Vec<String>,
}

impl Manifest {
    /// Builds a manifest for `command` with its resolved configuration.
    pub fn new(command: &str, config: &impl Serialize) -> Result<Self> {
        let config = serde_json::to_value(config)
            .map_err(|e| Error::InvalidArgument(format!("unserializable config: {e}")))?;
        Ok(Manifest {
            format_version: FORMAT_VERSION,
            command: command.to_string(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// Renders the manifest as pretty-printed JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut text = serde_json::to_string_pretty(self)
            .expect("manifest serializes to JSON by construction");
        text.push('\n');
        text
    }

    /// Writes the manifest as JSON, atomically.
    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_json_string().as_bytes())
    }

    /// Reads a manifest, rejecting unknown keys and format versions.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported manifest format_version {} (expected {})",
                manifest.format_version, FORMAT_VERSION
            )));
        }
        Ok(manifest)
    }
}

/// Renders an attention matrix as CSV: a header of variable names (one
/// column per target network) and then row `i` giving channel `i`'s score
/// inside each column. For softmax attention every column sums to 1.
pub fn attention_csv_string(names: &[String], attention: &Matrix) -> Result<String> {
    if names.len() != attention.n() {
        return Err(Error::InvalidArgument(format!(
            "{} names for a {}x{} attention matrix",
            names.len(),
            attention.n(),
            attention.n()
        )));
    }
    let mut out = String::new();
    out.push_str(&names.join(","));
    out.push('\n');
    for i in 0..attention.n() {
        for k in 0..attention.n() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", attention.get(i, k)));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes an attention matrix as CSV (see [`attention_csv_string`]).
pub fn write_attention_csv(names: &[String], attention: &Matrix, path: &Path) -> Result<()> {
    atomic_write(path, attention_csv_string(names, attention)?.as_bytes())
}

/// Renders a training trace as CSV with columns
/// `epoch,total,penalty,l1,mse_0..mse_{n-1}`. The `penalty`, `l1`, and
/// per-network `mse` columns are the raw (unweighted) loss components;
/// `total` already applies the loss weights.
pub fn trace_csv_string(trace: &TrainingTrace) -> String {
    let n = trace.records.first().map_or(0, |r| r.mse.len());
    let mut out = String::from("epoch,total,penalty,l1");
    for k in 0..n {
        out.push_str(&format!(",mse_{k}"));
    }
    out.push('\n');
    for record in &trace.records {
        out.push_str(&format!(
            "{},{},{},{}",
            record.epoch, record.total, record.penalty, record.l1
        ));
        for mse in &record.mse {
            out.push_str(&format!(",{mse}"));
        }
        out.push('\n');
    }
    out
}

/// Writes a training trace as CSV (see [`trace_csv_string`]).
pub fn write_trace_csv(trace: &TrainingTrace, path: &Path) -> Result<()> {
    atomic_write(path, trace_csv_string(trace).as_bytes())
}
