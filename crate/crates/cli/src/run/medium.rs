use corridor_core::medium::{
    displacement_sweep, fit_validity_curve, form_factor_from_medium, reduce_to_phenomenological,
    verify_r2_identity, PathPair3, TwoTimeKernel,
};
use corridor_core::readout::seeded_rng;
use nalgebra::DMatrix;
use rand::Rng;

use crate::config::Scenario;
use crate::error::CliError;
use crate::manifest::RunRecorder;
use crate::table::Table;

/// Path pairs with coordinates uniform in `[-amplitude, amplitude]`, one
/// RNG stream per pair.
pub fn path_corpus(count: usize, steps: usize, dim: usize, amplitude: f64, seed: u64) -> Vec<PathPair3> {
    (0..count)
        .map(|i| {
            let mut rng = seeded_rng(seed, i as u64);
            let mut draw = || DMatrix::from_fn(steps, dim, |_, _| amplitude * rng.random_range(-1.0..=1.0));
            let r1 = draw();
            let r2 = draw();
            PathPair3::new(r1, r2).expect("finite corpus")
        })
        .collect()
}

pub(super) fn run(s: &Scenario, rec: &mut RunRecorder) -> Result<(), CliError> {
    let m = s
        .config
        .medium
        .as_ref()
        .ok_or_else(|| CliError::field("medium", "section required for medium-compare"))?;
    let time = &s.system.time;
    let dt = time.dt();
    let kappa = s.system.kappa;
    let corpus = path_corpus(m.paths, time.steps(), m.dimension, m.amplitude, s.config.run.seed);
    let factor = s.form_factor.factorize(time)?;

    let mut r2 = Table::new(
        "quadratic-bracket identity per corpus instance",
        &[("instance", "index"), ("lhs", "length^2 time"), ("rhs", "length^2 time"), ("abs_diff", "length^2 time")],
    );
    let mut red = Table::new(
        "first-order medium functional against the coarse kernel",
        &[("instance", "index"), ("w_model", "1"), ("w_rpi", "1"), ("relative_gap", "1")],
    );
    let mut worst_r2 = 0.0f64;
    let mut worst_gap = 0.0f64;
    for (i, pp) in corpus.iter().enumerate() {
        let c = verify_r2_identity(pp, &factor, dt)?;
        worst_r2 = worst_r2.max(c.abs_diff / c.rhs.abs().max(1.0));
        r2.push(vec![i as f64, c.lhs, c.rhs, c.abs_diff]);
        let r = reduce_to_phenomenological(pp, &s.form_factor, kappa, time)?;
        worst_gap = worst_gap.max(r.relative_gap);
        red.push(vec![i as f64, r.w_model, r.w_rpi, r.relative_gap]);
    }
    rec.write_table("r2.tsv", "r2 identity on the path corpus", &r2)?;
    rec.write_table("reduction.tsv", "W_model, W_rpi and their gap", &red)?;
    rec.check_below("r2.max_scaled_diff", worst_r2, Some(s.config.checks.r2.unwrap_or(1e-12)));
    rec.check_below("reduction.max_gap", worst_gap, Some(s.config.checks.reduction.unwrap_or(1e-10)));

    let (kernel, sweep_kappa, rpi_factor) = match &m.band {
        Some(b) => {
            let mf = form_factor_from_medium(&b.density(m.range, s.config.physics.hbar), m.range, time, None)?;
            let mut profile = Table::new("medium form-factor", &[("t", "time"), ("pi", "1/time")]);
            profile.note(format!("kappa = {:.16e}", mf.kappa));
            profile.note(format!("cutoff = {:.16e}", mf.cutoff));
            for i in 0..=mf.kernel.band().min(4 * time.steps()) {
                let t = i as f64 * dt;
                profile.push(vec![t, mf.profile(t)]);
            }
            rec.write_table("medium_profile.tsv", "form-factor induced by the medium", &profile)?;
            (mf.kernel, mf.kappa, None)
        }
        None => (TwoTimeKernel::factorized(&factor)?, kappa, Some(&factor)),
    };

    let mut sweep = Table::new(
        "exact against first-order medium functional under path scaling",
        &[
            ("scale", "1"),
            ("displacement", "length"),
            ("log_exact", "1"),
            ("log_firstorder", "1"),
            ("relative_gap", "1"),
            ("taylor_bound", "1"),
            ("fitted_gap", "1"),
            ("rpi_gap", "1"),
        ],
    );
    if let Some(pp) = corpus.first() {
        let points = displacement_sweep(pp, &kernel, rpi_factor, sweep_kappa, m.range, dt, &m.scales)?;
        let fit = (points.len() >= 2).then(|| fit_validity_curve(&points, m.range)).transpose()?;
        if let Some(f) = &fit {
            sweep.note(format!("fitted_gap = C (R/l)^2 with C = {:.16e}", f.coefficient));
            sweep.note(format!("log-log slope = {:.16e}", f.slope));
            rec.check_flag("sweep.monotone", f.monotone);
            rec.check_below("sweep.slope", f.slope, None);
        }
        for p in &points {
            let fitted = fit.map_or(f64::NAN, |f| f.coefficient * (p.displacement / m.range).powi(2));
            sweep.push(vec![
                p.scale,
                p.displacement,
                p.log_exact,
                p.log_firstorder,
                p.relative_gap,
                p.taylor_bound,
                fitted,
                p.rpi_gap.unwrap_or(f64::NAN),
            ]);
            rec.check_flag(
                &format!("sweep.taylor_bound@{}", p.scale),
                (p.log_exact - p.log_firstorder).abs() <= p.taylor_bound * (1.0 + 1e-9) + 1e-300,
            );
        }
    }
    rec.write_table("sweep.tsv", "validity sweep in the displacement scale", &sweep)?;
    Ok(())
}
