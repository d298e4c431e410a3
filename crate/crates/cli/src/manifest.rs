use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::table::Table;

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Evolve,
    Average,
    UnitarityCheck,
    MediumCompare,
    ZenoSweep,
    Convergence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Evolve => "evolve",
            Self::Average => "average",
            Self::UnitarityCheck => "unitarity-check",
            Self::MediumCompare => "medium-compare",
            Self::ZenoSweep => "zeno-sweep",
            Self::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    /// `value < tolerance` is required when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// `value >= minimum` is required when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimum: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub version: String,
    pub seeds: Vec<u64>,
    /// Worker threads available to the parallel engines.
    pub threads: usize,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    /// Directory relative inputs were resolved against.
    pub base: PathBuf,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
    pub outputs: Vec<OutputRecord>,
    pub config: ScenarioConfig,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {}", path.display(), e.message())))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).map_err(|e| CliError::Numerical(format!("manifest: {e}")))?;
        std::fs::write(&path, text).map_err(|e| CliError::io(path.display(), e))?;
        Ok(path)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output files of one run plus the checks made along the way.
#[derive(Debug)]
pub struct RunRecorder {
    dir: PathBuf,
    pub outputs: Vec<OutputRecord>,
    pub checks: Vec<CheckRecord>,
}

impl RunRecorder {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            checks: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_table(&mut self, file: &str, description: &str, table: &Table) -> Result<(), CliError> {
        assert!(
            self.outputs.iter().all(|o| o.file != file),
            "output `{file}` written twice"
        );
        let text = table.render();
        let path = self.dir.join(file);
        std::fs::write(&path, &text).map_err(|e| CliError::io(path.display(), e))?;
        self.outputs.push(OutputRecord {
            file: file.to_string(),
            sha256: sha256_hex(text.as_bytes()),
            description: description.to_string(),
        });
        Ok(())
    }

    /// Records `value < tolerance`; without a tolerance only finiteness is
    /// required.
    pub fn check_below(&mut self, name: &str, value: f64, tolerance: Option<f64>) {
        let passed = match tolerance {
            Some(t) => value < t,
            None => !value.is_nan(),
        };
        self.checks.push(CheckRecord {
            name: name.to_string(),
            value,
            tolerance,
            minimum: None,
            passed,
        });
    }

    pub fn check_at_least(&mut self, name: &str, value: f64, minimum: Option<f64>) {
        let passed = match minimum {
            Some(m) => value >= m,
            None => !value.is_nan(),
        };
        self.checks.push(CheckRecord {
            name: name.to_string(),
            value,
            tolerance: None,
            minimum,
            passed,
        });
    }

    pub fn check_flag(&mut self, name: &str, ok: bool) {
        self.checks.push(CheckRecord {
            name: name.to_string(),
            value: if ok { 1.0 } else { 0.0 },
            tolerance: None,
            minimum: None,
            passed: ok,
        });
    }
}
