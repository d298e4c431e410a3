use corridor_core::nonselective::{
    lindblad_evolve_observed, readout_average, superpropagate, AverageMode, InfluenceKernel,
    SuperMode,
};
use corridor_core::DensityMatrixGrid;

use super::{coherence_pairs, density_table, diagonal_variance};
use crate::config::{AverageEngine, EngineMode, Scenario};
use crate::error::CliError;
use crate::manifest::RunRecorder;
use crate::table::Table;

pub(crate) struct EngineRun {
    pub engine: AverageEngine,
    pub rho: DensityMatrixGrid,
    /// Deterministic engines must conserve the trace to rounding.
    pub exact: bool,
}

pub(crate) fn engine_name(e: AverageEngine) -> &'static str {
    match e {
        AverageEngine::Lindblad => "lindblad",
        AverageEngine::ReadoutAverage => "readout-average",
        AverageEngine::Superpropagate => "superpropagate",
    }
}

/// Runs one non-selective engine on the scenario's initial state.
pub(crate) fn run_engine(s: &Scenario, engine: AverageEngine, sys: &corridor_core::MonitoredSystem) -> Result<EngineRun, CliError> {
    let rho0 = DensityMatrixGrid::from_pure(&s.initial);
    let e = &s.config.engine;
    let coarse = !s.form_factor.is_delta();
    let mc = e.mode == EngineMode::MonteCarlo;
    let rho = match engine {
        AverageEngine::Lindblad => corridor_core::nonselective::lindblad_evolve(&rho0, sys)?,
        AverageEngine::ReadoutAverage => {
            let mode = match e.mode {
                EngineMode::Exact | EngineMode::ClosedForm => AverageMode::ClosedForm,
                EngineMode::GaussHermite => AverageMode::GaussHermite { nodes: e.nodes },
                EngineMode::MonteCarlo => AverageMode::MonteCarlo {
                    samples: e.samples,
                    seed: s.config.run.seed,
                },
            };
            let ff = coarse.then_some(&s.form_factor);
            readout_average(&s.initial, sys, ff, mode)?.rho
        }
        AverageEngine::Superpropagate => {
            let kernel = if coarse {
                InfluenceKernel::Coarse {
                    kappa: sys.kappa,
                    form_factor: s.form_factor.clone(),
                }
            } else {
                InfluenceKernel::Ideal { kappa: sys.kappa }
            };
            let mode = if mc {
                SuperMode::MonteCarlo {
                    samples: e.samples,
                    seed: s.config.run.seed,
                }
            } else {
                SuperMode::Exact
            };
            superpropagate(&rho0, &kernel, sys, mode)?.rho
        }
    };
    Ok(EngineRun {
        engine,
        rho,
        exact: !mc || engine == AverageEngine::Lindblad,
    })
}

pub(super) fn run(s: &Scenario, rec: &mut RunRecorder) -> Result<(), CliError> {
    let sys = &s.system;
    let grid = &sys.grid;
    let rho0 = DensityMatrixGrid::from_pure(&s.initial);

    let pairs = coherence_pairs(s);
    let a = sys.observable.values();
    let mut columns = vec![("t".to_string(), "time".to_string())];
    for [k, l] in &pairs {
        columns.push((format!("abs_rho({k},{l})"), "1/length".into()));
        columns.push((format!("free_decay({k},{l})"), "1/length".into()));
    }
    let mut coherence = Table::with_columns("coherences under the master equation", columns);
    coherence.note("free_decay: |rho_0(k,l)| exp(-kappa/2 (A_k - A_l)^2 t), exact for H = 0");
    let mut purity = Table::new(
        "purity and spread under the master equation",
        &[("t", "time"), ("purity", "1"), ("trace", "1"), ("position_variance", "length^2")],
    );
    let row = |t: f64, rho: &DensityMatrixGrid| {
        let mut r = vec![t];
        for &[k, l] in &pairs {
            let m0 = rho0.entries()[(k, l)].norm();
            r.push(rho.entries()[(k, l)].norm());
            r.push(m0 * (-0.5 * sys.kappa * (a[k] - a[l]).powi(2) * t).exp());
        }
        r
    };
    coherence.push(row(0.0, &rho0));
    purity.push(vec![0.0, rho0.purity(), rho0.trace().re, diagonal_variance(&rho0, grid)]);
    lindblad_evolve_observed(&rho0, sys, |i, rho| {
        let t = sys.time.instant(i + 1);
        coherence.push(row(t, rho));
        purity.push(vec![t, rho.purity(), rho.trace().re, diagonal_variance(rho, grid)]);
    })?;
    rec.write_table("coherence.tsv", "selected coherences over time", &coherence)?;
    rec.write_table("purity.tsv", "purity, trace and position variance over time", &purity)?;

    let mut runs = Vec::new();
    for &engine in &s.config.engine.average {
        let r = run_engine(s, engine, sys)?;
        let name = engine_name(engine);
        rec.write_table(
            &format!("rho_{name}.tsv"),
            &format!("final density matrix from {name}"),
            &density_table(&format!("final density matrix ({name})"), &r.rho, grid),
        )?;
        let trace_tol = r.exact.then_some(1e-10);
        rec.check_below(&format!("{name}.trace_error"), (r.rho.trace().re - 1.0).abs(), trace_tol);
        rec.check_below(&format!("{name}.hermiticity"), r.rho.hermiticity_error(), trace_tol);
        runs.push(r);
    }

    let mut agreement = Table::new(
        "pairwise max-entry distance between engines",
        &[("engine_a", "index"), ("engine_b", "index"), ("distance", "1/length")],
    );
    let names: Vec<String> = runs.iter().enumerate().map(|(i, r)| format!("{i}={}", engine_name(r.engine))).collect();
    agreement.note(format!("engines: {}", names.join(" ")));
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            let d = runs[i].rho.max_abs_diff(&runs[j].rho);
            agreement.push(vec![i as f64, j as f64, d]);
            rec.check_below(
                &format!("agreement.{}-{}", engine_name(runs[i].engine), engine_name(runs[j].engine)),
                d,
                s.config.checks.agreement,
            );
        }
    }
    rec.write_table("agreement.tsv", "pairwise engine distances", &agreement)?;
    Ok(())
}
