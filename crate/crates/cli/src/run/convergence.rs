use corridor_core::nonselective::{superpropagate, InfluenceKernel, SuperMode};
use corridor_core::numerics::{halving_orders, log_log_slope};
use corridor_core::{DensityMatrixGrid, FormFactor, C64};

use super::average::run_engine;
use crate::config::{EngineMode, FormFactorChoice, Scenario, Study};
use crate::error::CliError;
use crate::manifest::RunRecorder;
use crate::table::Table;

/// One refinement level of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    /// `Δt` or `τ`.
    pub parameter: f64,
    pub error: f64,
    /// Same distance after Richardson extrapolation of each engine over
    /// this level and the previous one (time-step study only).
    pub extrapolated: f64,
}

fn richardson(fine: &DensityMatrixGrid, coarse: &DensityMatrixGrid) -> DensityMatrixGrid {
    let m = (fine.entries() * C64::new(4.0, 0.0) - coarse.entries()) / C64::new(3.0, 0.0);
    DensityMatrixGrid::new(m, fine.spacing()).expect("same shape")
}

fn max_pairwise(rhos: &[DensityMatrixGrid]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..rhos.len() {
        for j in i + 1..rhos.len() {
            d = d.max(rhos[i].max_abs_diff(&rhos[j]));
        }
    }
    d
}

/// Halves `Δt` at each level. With several engines the error is their
/// largest pairwise distance; with one it is the change from the previous
/// level.
pub fn time_step_levels(s: &Scenario, levels: usize) -> Result<Vec<Level>, CliError> {
    if s.config.engine.mode == EngineMode::MonteCarlo {
        return Err(CliError::field("engine.mode", "convergence studies need deterministic engines"));
    }
    let mut out = Vec::with_capacity(levels);
    let mut previous: Option<Vec<DensityMatrixGrid>> = None;
    for k in 0..levels {
        let time = s.system.time.refined(1 << k)?;
        let sys = s.system.with_time(time);
        let mut scenario = s.clone();
        scenario.form_factor = rebuild_form_factor(s, &time)?;
        let rhos = s
            .config
            .engine
            .average
            .iter()
            .map(|&e| run_engine(&scenario, e, &sys).map(|r| r.rho))
            .collect::<Result<Vec<_>, _>>()?;
        let (error, extrapolated) = match (&previous, rhos.len()) {
            (None, 1) => (f64::NAN, f64::NAN),
            (None, _) => (max_pairwise(&rhos), f64::NAN),
            (Some(p), 1) => (rhos[0].max_abs_diff(&p[0]), f64::NAN),
            (Some(p), _) => {
                let ex: Vec<DensityMatrixGrid> = rhos.iter().zip(p).map(|(f, c)| richardson(f, c)).collect();
                (max_pairwise(&rhos), max_pairwise(&ex))
            }
        };
        out.push(Level {
            parameter: time.dt(),
            error,
            extrapolated,
        });
        previous = Some(rhos);
    }
    Ok(out)
}

fn rebuild_form_factor(s: &Scenario, time: &corridor_core::TimeGrid) -> Result<FormFactor, CliError> {
    crate::config::build_form_factor(&s.config.measurement.form_factor, time, &s.base)
}

/// Halves the Gaussian `τ` at each level and measures the exact coarse
/// superpropagator against the ideal one.
pub fn resolution_levels(s: &Scenario, levels: usize) -> Result<Vec<Level>, CliError> {
    let FormFactorChoice::Gaussian { tau } = s.config.measurement.form_factor else {
        return Err(CliError::field("measurement.form_factor", "resolution study needs a gaussian form-factor"));
    };
    let sys = &s.system;
    let rho0 = DensityMatrixGrid::from_pure(&s.initial);
    let ideal = superpropagate(&rho0, &InfluenceKernel::Ideal { kappa: sys.kappa }, sys, SuperMode::Exact)?.rho;
    (0..levels)
        .map(|k| {
            let t = tau / (1u64 << k) as f64;
            let kernel = InfluenceKernel::Coarse {
                kappa: sys.kappa,
                form_factor: FormFactor::gaussian(&sys.time, t)?,
            };
            let rho = superpropagate(&rho0, &kernel, sys, SuperMode::Exact)?.rho;
            Ok(Level {
                parameter: t,
                error: rho.max_abs_diff(&ideal),
                extrapolated: f64::NAN,
            })
        })
        .collect()
}

/// Log-log slope over the levels with a positive finite error.
pub fn fitted_order(levels: &[Level]) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = levels
        .iter()
        .filter(|l| l.error.is_finite() && l.error > 0.0)
        .map(|l| (l.parameter, l.error))
        .unzip();
    if x.len() < 2 {
        f64::NAN
    } else {
        log_log_slope(&x, &y)
    }
}

pub(super) fn run(s: &Scenario, rec: &mut RunRecorder) -> Result<(), CliError> {
    let c = s
        .config
        .convergence
        .as_ref()
        .ok_or_else(|| CliError::field("convergence", "section required for convergence"))?;
    let (levels, name, unit) = match c.study {
        Study::TimeStep => (time_step_levels(s, c.levels)?, "dt", "time"),
        Study::Resolution => (resolution_levels(s, c.levels)?, "tau", "time"),
    };
    let slope = fitted_order(&levels);
    let errors: Vec<f64> = levels.iter().map(|l| l.error).collect();
    let mut orders = vec![f64::NAN];
    orders.extend(halving_orders(&errors));
    let mut t = Table::new(
        "halving study",
        &[
            (name, unit),
            ("error", "1/length"),
            ("extrapolated_error", "1/length"),
            ("local_order", "1"),
            ("fitted_slope", "1"),
        ],
    );
    t.note(format!("fitted log-log slope = {slope:.16e}"));
    for (l, o) in levels.iter().zip(&orders) {
        t.push(vec![l.parameter, l.error, l.extrapolated, *o, slope]);
    }
    rec.write_table("convergence.tsv", "error against the halved parameter", &t)?;
    let finite: Vec<f64> = orders.iter().copied().filter(|o| o.is_finite()).collect();
    let worst = finite.iter().copied().fold(f64::INFINITY, f64::min);
    rec.check_at_least("convergence.fitted_slope", slope, s.config.checks.min_order);
    rec.check_at_least(
        "convergence.min_local_order",
        if finite.is_empty() { f64::NAN } else { worst },
        s.config.checks.min_order,
    );
    Ok(())
}
