//! Selective (readout-conditioned) evolution.

mod coarse;
mod effective;
mod montecarlo;
mod monitor;

pub use coarse::{coarse_kernel_operator, evolve_selective_coarse};
pub use effective::{
    effective_step, evolve_selective_ideal, ideal_kernel_operator, EffectivePropagator,
};
pub use montecarlo::{evolve_selective_coarse_mc, SelectiveEstimate};
pub(crate) use coarse::CoarseEngine;
pub(crate) use montecarlo::{run_chunks, PathSampler, StartSampler};
pub use monitor::{sample_monitored_trajectory, MonitoredRun};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{kernel_matrix, MonitoredSystem, QuantumState};
use crate::readout::readout_measure_factor;

/// Conditioned state and readout probability density for one readout.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectiveResult {
    /// Unnormalized `ψ_T`.
    pub state: QuantumState,
    pub norm_sq: f64,
    /// `N ln c`, `-∞` for κ = 0 where the readout carries no density.
    pub log_measure: f64,
    /// `P[a] = c^N ‖ψ_T‖²`.
    pub probability: f64,
}

impl SelectiveResult {
    pub(crate) fn new(state: QuantumState, sys: &MonitoredSystem) -> Self {
        let norm_sq = state.norm_sq();
        let log_measure = log_measure(sys);
        Self {
            state,
            norm_sq,
            log_measure,
            probability: norm_sq * log_measure.exp(),
        }
    }
}

pub(crate) fn log_measure(sys: &MonitoredSystem) -> f64 {
    match readout_measure_factor(sys.kappa, sys.dt()) {
        Ok(c) => sys.time.steps() as f64 * c.ln(),
        Err(_) => f64::NEG_INFINITY,
    }
}

pub(crate) fn check_state(state: &QuantumState, sys: &MonitoredSystem) -> Result<()> {
    if state.len() != sys.points() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} amplitudes for a {}-point grid",
            state.len(),
            sys.points()
        )));
    }
    Ok(())
}

/// Explicit half-step and full-step kernels used by the path-sum engines.
pub(crate) struct PathKernels {
    pub half: DMatrix<C64>,
    pub full: DMatrix<C64>,
}

impl PathKernels {
    pub fn new(sys: &MonitoredSystem) -> Result<Self> {
        let half = kernel_matrix(&sys.grid, &sys.hamiltonian, 0.5 * sys.dt())?;
        let full = &half * &half;
        Ok(Self { half, full })
    }

    /// `transition[to * n + from] = K[to, from]`.
    pub fn transition(&self) -> Vec<C64> {
        let n = self.full.nrows();
        let mut t = Vec::with_capacity(n * n);
        for to in 0..n {
            for from in 0..n {
                t.push(self.full[(to, from)]);
            }
        }
        t
    }
}
