use corridor_core::selective::{
    evolve_selective_coarse, evolve_selective_coarse_mc, evolve_selective_ideal,
    sample_monitored_trajectory, EffectivePropagator, SelectiveResult,
};
use corridor_core::{QuantumState, ReadoutTrajectory};

use crate::config::{load_readout, EngineMode, ReadoutSource, Scenario};
use crate::error::CliError;
use crate::manifest::RunRecorder;
use crate::table::Table;

pub(super) fn run(s: &Scenario, rec: &mut RunRecorder) -> Result<(), CliError> {
    let sys = &s.system;
    let steps = sys.time.steps();
    let ideal = s.form_factor.is_delta();
    if matches!(s.readout, ReadoutSource::Monitored) && sys.kappa == 0.0 {
        return Err(CliError::field("physics.kappa", "monitored readouts need kappa > 0"));
    }
    let readout = match load_readout(&s.readout, steps, &s.base)? {
        Some(r) => r,
        None if ideal => sample_monitored_trajectory(&s.initial, sys, s.config.run.seed, |_, _| {})?.readout,
        None => {
            return Err(CliError::field(
                "measurement.readout",
                "monitored readouts need the delta form-factor",
            ))
        }
    };

    let mut norms = Table::new(
        "norm of the conditioned state",
        &[("t", "time"), ("norm_sq", "1"), ("position_variance", "length^2")],
    );
    let mode = s.config.engine.mode;
    let (result, se) = if ideal {
        let prop = EffectivePropagator::new(sys)?;
        let mut psi = s.initial.clone();
        push_norm(&mut norms, 0.0, &psi, s);
        for (i, &a) in readout.values().iter().enumerate() {
            prop.apply(psi.amplitudes_mut(), a);
            push_norm(&mut norms, sys.time.instant(i + 1), &psi, s);
        }
        (evolve_selective_ideal(&s.initial, &readout, sys)?, None)
    } else {
        let (r, se) = match mode {
            EngineMode::MonteCarlo => {
                let e = evolve_selective_coarse_mc(
                    &s.initial,
                    &readout,
                    &s.form_factor,
                    sys,
                    s.config.engine.samples,
                    s.config.run.seed,
                )?;
                (e.result, Some(e.probability_standard_error))
            }
            EngineMode::Exact => (evolve_selective_coarse(&s.initial, &readout, &s.form_factor, sys)?, None),
            other => {
                return Err(CliError::field(
                    "engine.mode",
                    format!("`{other:?}` is not a selective engine mode"),
                ))
            }
        };
        push_norm(&mut norms, 0.0, &s.initial, s);
        push_norm(&mut norms, sys.time.duration(), &r.state, s);
        (r, se)
    };

    rec.write_table("state.tsv", "conditioned (unnormalized) final state", &state_table(&result, s))?;
    rec.write_table("readout.tsv", "readout values at the step midpoints", &readout_table(&readout, s))?;
    rec.write_table("norm.tsv", "squared norm and variance over time", &norms)?;
    let mut p = Table::new(
        "readout probability density",
        &[
            ("norm_sq", "1"),
            ("log_measure", "1"),
            ("probability", "length^-N"),
            ("probability_se", "length^-N"),
        ],
    );
    p.note(format!("engine: {}", if ideal { "ideal" } else { "coarse" }));
    p.push(vec![result.norm_sq, result.log_measure, result.probability, se.unwrap_or(0.0)]);
    rec.write_table("probability.tsv", "norm, measure and probability of the readout", &p)?;

    rec.check_below("norm_sq_excess", result.norm_sq - 1.0, Some(1e-12));
    rec.check_flag("probability_finite", result.probability.is_finite() && result.probability >= 0.0);
    Ok(())
}

fn push_norm(t: &mut Table, time: f64, psi: &QuantumState, s: &Scenario) {
    let var = psi.clone().normalized().periodic_position_variance(&s.system.grid);
    t.push(vec![time, psi.norm_sq(), var]);
}

fn state_table(r: &SelectiveResult, s: &Scenario) -> Table {
    let mut t = Table::new(
        "final conditioned state",
        &[
            ("q", "length"),
            ("re_psi", "length^-1/2"),
            ("im_psi", "length^-1/2"),
            ("abs_psi_sq", "1/length"),
        ],
    );
    for (q, z) in s.system.grid.coordinates().iter().zip(r.state.amplitudes()) {
        t.push(vec![*q, z.re, z.im, z.norm_sqr()]);
    }
    t
}

fn readout_table(r: &ReadoutTrajectory, s: &Scenario) -> Table {
    let mut t = Table::new("readout", &[("t", "time"), ("a", "observable")]);
    for (t_i, a) in s.system.time.sample_instants().iter().zip(r.values()) {
        t.push(vec![*t_i, *a]);
    }
    t
}
