use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{check_density, decay_factor};
use crate::error::Result;
use crate::lattice::{DensityMatrixGrid, MonitoredSystem, UnitaryPropagator};

/// Symmetric splitting of `ρ̇ = -(i/ħ)[H, ρ] - (κ/2)[A, [A, ρ]]`: exact
/// double-commutator decay over `Δt/2`, unitary step over `Δt`, decay again.
#[derive(Debug, Clone)]
pub struct LindbladPropagator {
    unitary: UnitaryPropagator,
    half_decay: DMatrix<f64>,
}

impl LindbladPropagator {
    pub fn new(sys: &MonitoredSystem) -> Result<Self> {
        Ok(Self {
            unitary: UnitaryPropagator::new(&sys.grid, &sys.hamiltonian, sys.dt())?,
            half_decay: decay_factor(sys, 0.5 * sys.dt()),
        })
    }

    pub fn apply(&self, rho: &mut DMatrix<C64>) {
        rho.zip_apply(&self.half_decay, |r, g| *r *= g);
        self.unitary.sandwich(rho);
        rho.zip_apply(&self.half_decay, |r, g| *r *= g);
    }
}

pub fn lindblad_evolve(rho0: &DensityMatrixGrid, sys: &MonitoredSystem) -> Result<DensityMatrixGrid> {
    lindblad_evolve_observed(rho0, sys, |_, _| {})
}

/// As [`lindblad_evolve`], calling `observer(i, ρ)` after step `i`.
pub fn lindblad_evolve_observed<F>(
    rho0: &DensityMatrixGrid,
    sys: &MonitoredSystem,
    mut observer: F,
) -> Result<DensityMatrixGrid>
where
    F: FnMut(usize, &DensityMatrixGrid),
{
    check_density(rho0, sys)?;
    let prop = LindbladPropagator::new(sys)?;
    let mut rho = rho0.clone();
    for i in 0..sys.time.steps() {
        prop.apply(rho.entries_mut());
        observer(i, &rho);
    }
    Ok(rho)
}
