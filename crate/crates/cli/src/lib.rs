//! Scenario files, run orchestration and result persistence for the
//! corridor simulator.
//!
//! A run reads a TOML scenario, executes one subcommand, writes
//! tab-separated tables and finishes with `manifest.toml`, which records the
//! configuration snapshot, seeds, checks and a SHA-256 hash of every output.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;
pub mod table;

pub use config::{Scenario, ScenarioConfig};
pub use error::CliError;
pub use manifest::{Command, RunManifest};
pub use run::medium::path_corpus;
pub use run::{replay, run_config_file, run_scenario, Replay};
