use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{check_state, SelectiveResult};
use crate::error::Result;
use crate::lattice::{MonitoredSystem, QuantumState, UnitaryPropagator};
use crate::readout::ReadoutTrajectory;

/// One conditioned step `U(Δt/2) · exp[-κΔt (A - a)²] · U(Δt/2)`.
#[derive(Debug, Clone)]
pub struct EffectivePropagator {
    half: UnitaryPropagator,
    observable: Vec<f64>,
    scale: f64,
}

impl EffectivePropagator {
    pub fn new(sys: &MonitoredSystem) -> Result<Self> {
        Ok(Self {
            half: UnitaryPropagator::new(&sys.grid, &sys.hamiltonian, 0.5 * sys.dt())?,
            observable: sys.observable.values().to_vec(),
            scale: sys.kappa * sys.dt(),
        })
    }

    pub fn half_step(&self) -> &UnitaryPropagator {
        &self.half
    }

    /// Multiplies by the measurement factor for readout value `a`.
    pub fn filter(&self, psi: &mut [C64], a: f64) {
        for (amp, x) in psi.iter_mut().zip(&self.observable) {
            *amp *= (-self.scale * (x - a) * (x - a)).exp();
        }
    }

    pub fn apply(&self, psi: &mut [C64], a: f64) {
        self.half.apply(psi);
        self.filter(psi, a);
        self.half.apply(psi);
    }

    pub fn evolve(&self, psi: &mut [C64], readout: &[f64]) {
        for &a in readout {
            self.apply(psi, a);
        }
    }
}

pub fn effective_step(psi: &QuantumState, a: f64, sys: &MonitoredSystem) -> Result<QuantumState> {
    check_state(psi, sys)?;
    let mut amps = psi.amplitudes().to_vec();
    EffectivePropagator::new(sys)?.apply(&mut amps, a);
    QuantumState::new(amps, psi.spacing())
}

/// Conditioned evolution with ideal time resolution.
pub fn evolve_selective_ideal(
    psi0: &QuantumState,
    readout: &ReadoutTrajectory,
    sys: &MonitoredSystem,
) -> Result<SelectiveResult> {
    check_state(psi0, sys)?;
    readout.expect_len(sys.time.steps())?;
    let mut amps = psi0.amplitudes().to_vec();
    EffectivePropagator::new(sys)?.evolve(&mut amps, readout.values());
    Ok(SelectiveResult::new(QuantumState::new(amps, psi0.spacing())?, sys))
}

/// Matrix `U_a` of the ideal conditioned evolution on amplitude vectors.
pub fn ideal_kernel_operator(
    readout: &ReadoutTrajectory,
    sys: &MonitoredSystem,
) -> Result<DMatrix<C64>> {
    readout.expect_len(sys.time.steps())?;
    let prop = EffectivePropagator::new(sys)?;
    let n = sys.points();
    let mut m = DMatrix::<C64>::identity(n, n);
    for col in m.as_mut_slice().chunks_mut(n) {
        prop.evolve(col, readout.values());
    }
    Ok(m)
}
