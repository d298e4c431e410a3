//! Scenario execution. Each subcommand writes its tables through a
//! [`RunRecorder`] and the run ends with a manifest indexing every file.

mod average;
pub mod convergence;
mod evolve;
pub mod medium;
mod unitarity;
pub mod zeno;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use corridor_core::{DensityMatrixGrid, QuantumState, SpatialGrid, C64};

use crate::config::{Scenario, ScenarioConfig};
use crate::error::CliError;
use crate::manifest::{Command, RunManifest, RunRecorder, MANIFEST_FILE};
use crate::table::Table;

/// Runs `command` on a validated scenario and writes the outputs and
/// `manifest.toml` into `out`.
pub fn run_scenario(command: Command, scenario: &Scenario, out: &Path) -> Result<RunManifest, CliError> {
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let mut rec = RunRecorder::create(out)?;
    let mut seeds = vec![scenario.config.run.seed];
    match command {
        Command::Evolve => evolve::run(scenario, &mut rec)?,
        Command::Average => average::run(scenario, &mut rec)?,
        Command::UnitarityCheck => unitarity::run(scenario, &mut rec)?,
        Command::MediumCompare => medium::run(scenario, &mut rec)?,
        Command::ZenoSweep => seeds = zeno::run(scenario, &mut rec)?,
        Command::Convergence => convergence::run(scenario, &mut rec)?,
    }
    let passed = rec.checks.iter().all(|c| c.passed);
    let manifest = RunManifest {
        command,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seeds,
        threads: rayon::current_num_threads(),
        started_unix,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        base: scenario.base.clone(),
        passed,
        checks: rec.checks,
        outputs: rec.outputs,
        config: scenario.config.clone(),
    };
    manifest.write(out)?;
    Ok(manifest)
}

/// Loads, validates and runs a scenario file; relative paths in the file
/// resolve against its directory.
pub fn run_config_file(command: Command, config: &Path, out: Option<&Path>) -> Result<RunManifest, CliError> {
    let mut cfg = ScenarioConfig::load(config)?;
    let base = absolute(config.parent().unwrap_or(Path::new(".")))?;
    if let Some(o) = out {
        cfg.run.output = o.to_path_buf();
    }
    let out = base.join(&cfg.run.output);
    let scenario = cfg.validate(&base)?;
    run_scenario(command, &scenario, &out)
}

/// Outcome of re-running a manifest.
#[derive(Debug, Clone)]
pub struct Replay {
    pub original: RunManifest,
    pub rerun: RunManifest,
    /// Files whose hashes differ or that only one run produced.
    pub mismatches: Vec<String>,
}

impl Replay {
    pub fn identical(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Re-runs the scenario recorded in a manifest into `out` (default: a
/// sibling directory named `<dir>-replay`) and compares output hashes.
pub fn replay(manifest_path: &Path, out: Option<&Path>) -> Result<Replay, CliError> {
    let original = RunManifest::load(manifest_path)?;
    let dir = absolute(manifest_path.parent().unwrap_or(Path::new(".")))?;
    let out = match out {
        Some(o) => o.to_path_buf(),
        None => {
            let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
            dir.with_file_name(format!("{name}-replay"))
        }
    };
    if out == dir {
        return Err(CliError::Validation("replay output must differ from the original run directory".into()));
    }
    let scenario = original.config.clone().validate(&original.base)?;
    let rerun = run_scenario(original.command, &scenario, &out)?;
    let mut mismatches = Vec::new();
    for o in &original.outputs {
        match rerun.outputs.iter().find(|r| r.file == o.file) {
            Some(r) if r.sha256 == o.sha256 => {}
            _ => mismatches.push(o.file.clone()),
        }
    }
    for r in &rerun.outputs {
        if !original.outputs.iter().any(|o| o.file == r.file) {
            mismatches.push(r.file.clone());
        }
    }
    Ok(Replay {
        original,
        rerun,
        mismatches,
    })
}

fn absolute(p: &Path) -> Result<PathBuf, CliError> {
    let p = if p.as_os_str().is_empty() { Path::new(".") } else { p };
    std::path::absolute(p).map_err(|e| CliError::io(p.display(), e))
}

pub fn is_manifest(path: &Path) -> bool {
    path.file_name().is_some_and(|n| n == MANIFEST_FILE)
}

/// Position variance of the diagonal of `ρ` on the periodic grid.
pub(crate) fn diagonal_variance(rho: &DensityMatrixGrid, grid: &SpatialGrid) -> f64 {
    let amps: Vec<C64> = rho
        .diagonal_probabilities()
        .iter()
        .map(|p| C64::new(p.max(0.0).sqrt(), 0.0))
        .collect();
    QuantumState::new(amps, grid.spacing())
        .map(|s| s.periodic_position_variance(grid))
        .unwrap_or(f64::NAN)
}

pub(crate) fn density_table(title: &str, rho: &DensityMatrixGrid, grid: &SpatialGrid) -> Table {
    let mut t = Table::new(
        title,
        &[
            ("k", "index"),
            ("l", "index"),
            ("q_k", "length"),
            ("q_l", "length"),
            ("re_rho", "1/length"),
            ("im_rho", "1/length"),
        ],
    );
    let q = grid.coordinates();
    let m = rho.entries();
    for k in 0..rho.dim() {
        for l in 0..rho.dim() {
            t.push(vec![k as f64, l as f64, q[k], q[l], m[(k, l)].re, m[(k, l)].im]);
        }
    }
    t
}

/// Coherences tracked in time series: configured pairs, or the centre site
/// against a neighbour and against the quarter-box offset.
pub(crate) fn coherence_pairs(scenario: &Scenario) -> Vec<[usize; 2]> {
    if !scenario.config.report.pairs.is_empty() {
        return scenario.config.report.pairs.clone();
    }
    let n = scenario.system.points();
    let c = n / 2;
    let mut pairs = vec![[c, (c + 1) % n]];
    if n >= 8 {
        pairs.push([c, (c + n / 4) % n]);
    }
    pairs
}
