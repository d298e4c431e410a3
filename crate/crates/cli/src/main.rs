use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use corridor_cli::{replay, run_config_file, CliError, Command, RunManifest};

#[derive(Parser)]
#[command(name = "corridor", version, about = "Continuous-measurement simulations on a periodic lattice")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario file.
    config: PathBuf,
    /// Output directory, overriding `run.output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Selective evolution for one readout.
    Evolve {
        #[command(flatten)]
        args: RunArgs,
        /// `const:<a>`, `file:<path>` or `monitored`, overriding the scenario.
        #[arg(long)]
        readout: Option<String>,
    },
    /// Readout-averaged density matrix from the non-selective engines.
    Average(RunArgs),
    /// Deviation of the readout-integrated `U†U` from the identity.
    UnitarityCheck(RunArgs),
    /// Oscillator-medium functionals against the coarse kernel.
    MediumCompare(RunArgs),
    /// Conditioned position variance against the measurement strength.
    ZenoSweep(RunArgs),
    /// Time-step or resolution halving study.
    Convergence(RunArgs),
    /// Re-run a manifest and compare output hashes.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn report(m: &RunManifest) -> ExitCode {
    for c in &m.checks {
        let mark = if c.passed { "ok  " } else { "FAIL" };
        println!("{mark} {} = {:.6e}", c.name, c.value);
    }
    for o in &m.outputs {
        println!("wrote {} {}", o.file, &o.sha256[..16]);
    }
    if m.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let (command, args) = match cli.command {
        Sub::Replay { manifest, out } => {
            let r = replay(&manifest, out.as_deref())?;
            for f in &r.mismatches {
                println!("MISMATCH {f}");
            }
            println!("{} of {} outputs identical", r.original.outputs.len() - r.mismatches.len().min(r.original.outputs.len()), r.original.outputs.len());
            return Ok(if r.identical() { ExitCode::SUCCESS } else { ExitCode::from(2) });
        }
        Sub::Evolve { args, readout } => {
            if let Some(spec) = readout {
                let mut cfg = corridor_cli::ScenarioConfig::load(&args.config)?;
                cfg.measurement.readout = spec;
                let dir = args.config.parent().map(PathBuf::from).unwrap_or_default();
                let tmp = dir.join(format!(".{}.evolve.toml", std::process::id()));
                std::fs::write(&tmp, cfg.to_toml()).map_err(|e| CliError::io(tmp.display(), e))?;
                let result = run_config_file(Command::Evolve, &tmp, args.out.as_deref());
                let _ = std::fs::remove_file(&tmp);
                return result.map(|m| report(&m));
            }
            (Command::Evolve, args)
        }
        Sub::Average(a) => (Command::Average, a),
        Sub::UnitarityCheck(a) => (Command::UnitarityCheck, a),
        Sub::MediumCompare(a) => (Command::MediumCompare, a),
        Sub::ZenoSweep(a) => (Command::ZenoSweep, a),
        Sub::Convergence(a) => (Command::Convergence, a),
    };
    run_config_file(command, &args.config, args.out.as_deref()).map(|m| report(&m))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
