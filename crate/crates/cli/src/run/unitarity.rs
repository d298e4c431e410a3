use corridor_core::nonselective::{check_generalized_unitarity, UnitarityMode};

use crate::config::{EngineMode, Scenario};
use crate::error::CliError;
use crate::manifest::RunRecorder;
use crate::table::Table;

pub(super) fn run(s: &Scenario, rec: &mut RunRecorder) -> Result<(), CliError> {
    let e = &s.config.engine;
    let mode = match e.mode {
        EngineMode::MonteCarlo => UnitarityMode::MonteCarlo {
            samples: e.samples,
            seed: s.config.run.seed,
        },
        _ => UnitarityMode::Exact,
    };
    let ideal = s.form_factor.is_delta();
    let ff = (!ideal).then_some(&s.form_factor);
    let report = check_generalized_unitarity(&s.system, ff, mode)?;

    let mut t = Table::new(
        "readout-integrated operator M = integral of U^dagger[a] U[a]",
        &[
            ("k", "index"),
            ("l", "index"),
            ("re_m", "1"),
            ("im_m", "1"),
            ("standard_error", "1"),
        ],
    );
    t.note(format!("deviation max|M - 1| = {:.16e}", report.deviation));
    if let Some(d) = report.deviation_error {
        t.note(format!("deviation standard error = {d:.16e}"));
    }
    let n = report.operator.nrows();
    for k in 0..n {
        for l in 0..n {
            let z = report.operator[(k, l)];
            let se = report.standard_error.as_ref().map_or(0.0, |m| m[(k, l)]);
            t.push(vec![k as f64, l as f64, z.re, z.im, se]);
        }
    }
    rec.write_table("unitarity.tsv", "generalized-unitarity operator", &t)?;

    let tol = s.config.checks.unitarity.or(if ideal { Some(1e-10) } else { None });
    rec.check_below("unitarity.deviation", report.deviation, tol);
    if let Some(d) = report.deviation_error {
        rec.check_below("unitarity.deviation_standard_error", d, None);
    }
    Ok(())
}
