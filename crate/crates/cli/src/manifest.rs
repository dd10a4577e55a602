//! Run manifests (TOML).
//!
//! ```toml
//! out = "results"
//! align_window_seconds = 30.0
//! formats = ["frames", "summary", "cdf"]
//!
//! [fusion]
//! d_th = 0.4
//! o_th = 4.0
//! n_pairs = 2
//! t_opt = 8
//!
//! [[sequence]]
//! name = "office"
//! input = "office.csv"
//!
//! [[sequence]]
//! name = "synthetic"
//! mode = "evaluate"
//! [sequence.synth.trajectory]
//! seed = 7
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use posefuse_core::synth::SynthConfig;
use posefuse_core::FusionConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_ALIGN_WINDOW_SECONDS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Fuse APR with VIO; evaluate against GT when present.
    #[default]
    Fuse,
    /// Evaluate the VIO track against GT only.
    Evaluate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Frames,
    Summary,
    Cdf,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [
        ReportFormat::Frames,
        ReportFormat::Summary,
        ReportFormat::Cdf,
    ];
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceEntry {
    pub name: String,
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub synth: Option<SynthConfig>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub align_window_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub out: PathBuf,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default = "default_window")]
    pub align_window_seconds: f64,
    #[serde(default = "default_formats")]
    pub formats: Vec<ReportFormat>,
    #[serde(default, rename = "sequence")]
    pub sequences: Vec<SequenceEntry>,
}

fn default_window() -> f64 {
    DEFAULT_ALIGN_WINDOW_SECONDS
}

fn default_formats() -> Vec<ReportFormat> {
    ReportFormat::ALL.to_vec()
}

impl RunManifest {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            out: out.into(),
            fusion: FusionConfig::default(),
            align_window_seconds: DEFAULT_ALIGN_WINDOW_SECONDS,
            formats: default_formats(),
            sequences: Vec::new(),
        }
    }

    /// Parses a manifest; relative input paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut manifest: RunManifest =
            toml::from_str(text).map_err(|e| CliError::Validation(format!("manifest: {e}")))?;
        for seq in &mut manifest.sequences {
            if let Some(input) = &seq.input {
                if input.is_relative() {
                    seq.input = Some(base_dir.join(input));
                }
            }
        }
        if manifest.out.is_relative() {
            manifest.out = base_dir.join(&manifest.out);
        }
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.fusion
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        check_window(self.align_window_seconds)?;
        if self.sequences.is_empty() {
            return Err(CliError::Validation("manifest lists no sequences".into()));
        }
        let mut names = HashSet::new();
        for seq in &self.sequences {
            if seq.name.is_empty() || seq.name.contains(['/', '\\']) {
                return Err(CliError::Validation(format!(
                    "sequence name `{}` must be non-empty and contain no path separators",
                    seq.name
                )));
            }
            if !names.insert(seq.name.as_str()) {
                return Err(CliError::Validation(format!(
                    "duplicate sequence name `{}`",
                    seq.name
                )));
            }
            match (&seq.input, &seq.synth) {
                (Some(path), None) => {
                    if !path.is_file() {
                        return Err(CliError::Validation(format!(
                            "sequence `{}`: input file {} does not exist",
                            seq.name,
                            path.display()
                        )));
                    }
                }
                (None, Some(_)) => {}
                _ => {
                    return Err(CliError::Validation(format!(
                        "sequence `{}`: set exactly one of `input` or `synth`",
                        seq.name
                    )))
                }
            }
            if let Some(w) = seq.align_window_seconds {
                check_window(w)?;
            }
        }
        Ok(())
    }
}

fn check_window(w: f64) -> Result<(), CliError> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "align_window_seconds must be > 0, got {w}"
        )))
    }
}
