use super::{DiscretePath, FormFactor, ReadoutTrajectory};
use crate::error::{ensure_non_negative, Error, Result};

fn check(path: &DiscretePath, readout: &ReadoutTrajectory, kappa: f64, dt: f64) -> Result<()> {
    ensure_non_negative("kappa", kappa)?;
    ensure_non_negative("dt", dt)?;
    if path.len() != readout.len() {
        return Err(Error::DimensionMismatch(format!(
            "path has {} samples, readout has {}",
            path.len(),
            readout.len()
        )));
    }
    Ok(())
}

/// `-κ Σ_i (A_i - a_i)² Δt`.
pub fn log_weight_ideal(
    path: &DiscretePath,
    readout: &ReadoutTrajectory,
    kappa: f64,
    dt: f64,
) -> Result<f64> {
    check(path, readout, kappa, dt)?;
    let s: f64 = path
        .values()
        .iter()
        .zip(readout.values())
        .map(|(x, a)| (x - a) * (x - a))
        .sum();
    Ok(-kappa * s * dt)
}

/// Gaussian weight functional `exp[-κ ∫ (A - a)² dt]` with ideal time resolution.
pub fn weight_ideal(
    path: &DiscretePath,
    readout: &ReadoutTrajectory,
    kappa: f64,
    dt: f64,
) -> Result<f64> {
    log_weight_ideal(path, readout, kappa, dt).map(f64::exp)
}

pub fn log_weight_coarse(
    path: &DiscretePath,
    readout: &ReadoutTrajectory,
    form_factor: &FormFactor,
    kappa: f64,
    dt: f64,
) -> Result<f64> {
    log_weight_ideal(&form_factor.coarse_grain(path)?, readout, kappa, dt)
}

/// Finite-resolution weight `exp[-κ ∫ (a - Ā)² dt]` with `Ā` the coarse-grained path.
pub fn weight_coarse(
    path: &DiscretePath,
    readout: &ReadoutTrajectory,
    form_factor: &FormFactor,
    kappa: f64,
    dt: f64,
) -> Result<f64> {
    log_weight_coarse(path, readout, form_factor, kappa, dt).map(f64::exp)
}
