//! Readout-averaged (non-selective) evolution of the density matrix.

mod average;
mod influence;
mod lindblad;
mod superprop;
mod unitarity;

pub use average::{readout_average, AverageMode, AverageResult};
pub use influence::{influence_eval, log_influence, InfluenceKernel};
pub use lindblad::{lindblad_evolve, lindblad_evolve_observed, LindbladPropagator};
pub use superprop::{superpropagate, SuperMode, SuperResult};
pub use unitarity::{check_generalized_unitarity, UnitarityMode, UnitarityReport};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::{DensityMatrixGrid, MonitoredSystem};

/// `G_kk' = exp[-(κΔt/2)(A_k - A_k')²]`, the per-step readout average of
/// the measurement filter.
pub(crate) fn decay_factor(sys: &MonitoredSystem, dt: f64) -> DMatrix<f64> {
    let a = sys.observable.values();
    let n = a.len();
    let s = 0.5 * sys.kappa * dt;
    DMatrix::from_fn(n, n, |k, l| (-s * (a[k] - a[l]).powi(2)).exp())
}

pub(crate) fn check_density(rho: &DensityMatrixGrid, sys: &MonitoredSystem) -> Result<()> {
    if rho.dim() != sys.points() {
        return Err(Error::DimensionMismatch(format!(
            "density matrix is {}×{} for a {}-point grid",
            rho.dim(),
            rho.dim(),
            sys.points()
        )));
    }
    Ok(())
}
