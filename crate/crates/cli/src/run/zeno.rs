use corridor_core::numerics::log_log_slope;
use corridor_core::selective::sample_monitored_trajectory;
use corridor_core::TimeGrid;
use rayon::prelude::*;

use crate::config::Scenario;
use crate::error::CliError;
use crate::manifest::RunRecorder;
use crate::table::Table;

/// Seed of trajectory `j` at sweep point `k`.
pub fn trajectory_seed(seed: u64, k: usize, j: usize) -> u64 {
    seed.wrapping_add(((k as u64) << 32) | j as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZenoPoint {
    pub kappa: f64,
    pub duration: f64,
    /// Conditioned position variance averaged over the tail of each run and
    /// over trajectories.
    pub variance: f64,
    pub standard_error: f64,
}

pub fn zeno_points(s: &Scenario) -> Result<Vec<ZenoPoint>, CliError> {
    let sw = s
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::field("sweep", "section required for zeno-sweep"))?;
    let steps = s.system.time.steps();
    let first = ((1.0 - sw.tail) * steps as f64).floor() as usize;
    let ratio = (sw.kappa_max / sw.kappa_min).ln() / (sw.points - 1) as f64;
    let mut out = Vec::with_capacity(sw.points);
    for k in 0..sw.points {
        let kappa = sw.kappa_min * (ratio * k as f64).exp();
        let duration = sw.duration_scale.map_or(s.system.time.duration(), |c| c / kappa.sqrt());
        let sys = s
            .system
            .with_kappa(kappa)
            .with_time(TimeGrid::new(duration, steps).map_err(|e| CliError::field("sweep", e))?);
        let tails: Vec<f64> = (0..sw.trajectories)
            .into_par_iter()
            .map(|j| {
                let mut acc = 0.0;
                let mut count = 0usize;
                sample_monitored_trajectory(&s.initial, &sys, trajectory_seed(s.config.run.seed, k, j), |i, psi| {
                    if i >= first {
                        acc += psi.periodic_position_variance(&sys.grid);
                        count += 1;
                    }
                })?;
                Ok(acc / count.max(1) as f64)
            })
            .collect::<Result<_, corridor_core::Error>>()?;
        let n = tails.len() as f64;
        let mean = tails.iter().sum::<f64>() / n;
        let var = if tails.len() > 1 {
            tails.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        out.push(ZenoPoint {
            kappa,
            duration,
            variance: mean,
            standard_error: (var / n).sqrt(),
        });
    }
    Ok(out)
}

pub(super) fn run(s: &Scenario, rec: &mut RunRecorder) -> Result<Vec<u64>, CliError> {
    let points = zeno_points(s)?;
    let mut t = Table::new(
        "steady-state conditioned position variance against measurement strength",
        &[
            ("kappa", "1/(length^2 time)"),
            ("duration", "time"),
            ("variance", "length^2"),
            ("standard_error", "length^2"),
            ("free_steady_state", "length^2"),
        ],
    );
    t.note("free_steady_state: sqrt(hbar / (m kappa)) / 2, the conditioned variance of a free Gaussian state");
    let (m, hbar) = (s.config.physics.mass, s.config.physics.hbar);
    let kappas: Vec<f64> = points.iter().map(|p| p.kappa).collect();
    let vars: Vec<f64> = points.iter().map(|p| p.variance).collect();
    let slope = log_log_slope(&kappas, &vars);
    t.note(format!("log-log slope of variance in kappa = {slope:.16e}"));
    for p in &points {
        t.push(vec![p.kappa, p.duration, p.variance, p.standard_error, 0.5 * (hbar / (m * p.kappa)).sqrt()]);
    }
    rec.write_table("zeno.tsv", "localization sweep", &t)?;
    rec.check_flag("zeno.monotone_decreasing", vars.windows(2).all(|w| w[1] < w[0]));
    rec.check_below("zeno.slope", slope, None);
    Ok(vec![s.config.run.seed])
}
