use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use super::{HamiltonianSpec, QuantumState, SpatialGrid};
use crate::error::{Error, Result};

/// Largest grid for which [`short_time_kernel_matrix`] builds an explicit kernel.
pub const KERNEL_ORACLE_CAP: usize = 16;

/// Strang-split short-time propagator `e^{-iVΔt/2ħ} e^{-iTΔt/ħ} e^{-iVΔt/2ħ}`
/// with the kinetic factor applied in the discrete momentum representation.
#[derive(Clone)]
pub struct UnitaryPropagator {
    half_potential: Vec<C64>,
    /// Kinetic phase with the inverse-FFT `1/n` folded in. `None` when `H` has no kinetic term.
    kinetic: Option<Vec<C64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    dt: f64,
}

impl std::fmt::Debug for UnitaryPropagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryPropagator")
            .field("points", &self.half_potential.len())
            .field("dt", &self.dt)
            .finish()
    }
}

impl UnitaryPropagator {
    pub fn new(grid: &SpatialGrid, hamiltonian: &HamiltonianSpec, dt: f64) -> Result<Self> {
        hamiltonian.validate(grid)?;
        if !dt.is_finite() || dt < 0.0 {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("must be finite and >= 0, got {dt}"),
            });
        }
        let n = grid.points();
        let hbar = hamiltonian.hbar;
        let half_potential = hamiltonian
            .potential
            .iter()
            .map(|v| C64::from_polar(1.0, -v * dt / (2.0 * hbar)))
            .collect();
        let kinetic = hamiltonian.kinetic.then(|| {
            grid.wavenumbers()
                .iter()
                .map(|k| {
                    C64::from_polar(1.0 / n as f64, -hbar * k * k * dt / (2.0 * hamiltonian.mass))
                })
                .collect()
        });
        let mut planner = FftPlanner::new();
        Ok(Self {
            half_potential,
            kinetic,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn points(&self) -> usize {
        self.half_potential.len()
    }

    /// Applies the step to an amplitude vector in place.
    pub fn apply(&self, psi: &mut [C64]) {
        debug_assert_eq!(psi.len(), self.points());
        for (a, p) in psi.iter_mut().zip(&self.half_potential) {
            *a *= p;
        }
        if let Some(kinetic) = &self.kinetic {
            self.forward.process(psi);
            for (a, p) in psi.iter_mut().zip(kinetic) {
                *a *= p;
            }
            self.inverse.process(psi);
        }
        for (a, p) in psi.iter_mut().zip(&self.half_potential) {
            *a *= p;
        }
    }

    pub fn step(&self, state: &QuantumState) -> Result<QuantumState> {
        if state.len() != self.points() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} amplitudes, propagator expects {}",
                state.len(),
                self.points()
            )));
        }
        let mut a = state.amplitudes().to_vec();
        self.apply(&mut a);
        QuantumState::new(a, state.spacing())
    }

    /// `M ← U M` (applied column by column).
    pub fn apply_left(&self, m: &mut DMatrix<C64>) {
        let n = m.nrows();
        for col in m.as_mut_slice().chunks_mut(n) {
            self.apply(col);
        }
    }

    /// `M ← U M U†`.
    pub fn sandwich(&self, m: &mut DMatrix<C64>) {
        self.apply_left(m);
        let mut t = m.adjoint();
        self.apply_left(&mut t);
        m.copy_from(&t.adjoint());
    }
}

/// One split-operator step `ψ → U(Δt) ψ`.
pub fn unitary_step(
    psi: &QuantumState,
    grid: &SpatialGrid,
    hamiltonian: &HamiltonianSpec,
    dt: f64,
) -> Result<QuantumState> {
    UnitaryPropagator::new(grid, hamiltonian, dt)?.step(psi)
}

/// Matrix of the short-time step acting on amplitude vectors.
///
/// It is unitary in the plain sense; dividing by `Δq` gives the integral
/// kernel `K(q'', q')` with `ψ'(q'') = Σ K(q'', q') ψ(q') Δq`.
pub fn kernel_matrix(
    grid: &SpatialGrid,
    hamiltonian: &HamiltonianSpec,
    dt: f64,
) -> Result<DMatrix<C64>> {
    let u = UnitaryPropagator::new(grid, hamiltonian, dt)?;
    let mut m = DMatrix::<C64>::identity(grid.points(), grid.points());
    u.apply_left(&mut m);
    Ok(m)
}

/// Explicit short-time kernel for path-enumeration oracles (`n_q ≤ 16`).
pub fn short_time_kernel_matrix(
    grid: &SpatialGrid,
    hamiltonian: &HamiltonianSpec,
    dt: f64,
) -> Result<DMatrix<C64>> {
    if grid.points() > KERNEL_ORACLE_CAP {
        return Err(Error::OracleCap(format!(
            "explicit kernel limited to {KERNEL_ORACLE_CAP} grid points, got {}",
            grid.points()
        )));
    }
    kernel_matrix(grid, hamiltonian, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::max_abs_entry;
    use proptest::prelude::*;

    fn free_grid(n: usize) -> (SpatialGrid, HamiltonianSpec) {
        let g = SpatialGrid::new(8.0, n).unwrap();
        let h = HamiltonianSpec::free(&g, 1.0);
        (g, h)
    }

    #[test]
    fn zero_dt_is_identity() {
        let (g, h) = free_grid(16);
        let psi = QuantumState::gaussian(&g, 0.3, 0.8, 1.0, 1.0);
        let out = unitary_step(&psi, &g, &h, 0.0).unwrap();
        assert!(crate::numerics::max_abs_diff(out.amplitudes(), psi.amplitudes()) < 1e-14);
        let k = short_time_kernel_matrix(&g, &h, 0.0).unwrap();
        assert!(max_abs_entry(&(k - DMatrix::identity(16, 16))) < 1e-14);
    }

    #[test]
    fn momentum_mode_picks_up_free_phase() {
        let (g, h) = free_grid(32);
        for j in [0, 1, 5, 20, 31] {
            let psi = QuantumState::momentum_mode(&g, j);
            let dt = 0.37;
            let out = unitary_step(&psi, &g, &h, dt).unwrap();
            let k = g.wavenumbers()[j];
            let phase = C64::from_polar(1.0, -k * k * dt / 2.0);
            for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
                assert!((a - b * phase).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_cap_enforced() {
        let (g, h) = free_grid(32);
        assert!(matches!(
            short_time_kernel_matrix(&g, &h, 0.1),
            Err(Error::OracleCap(_))
        ));
    }

    #[test]
    fn kernel_unitary_with_random_potential() {
        let g = SpatialGrid::new(4.0, 8).unwrap();
        let v: Vec<f64> = (0..8).map(|k| ((k * 7919) % 13) as f64 * 0.37 - 2.0).collect();
        let h = HamiltonianSpec::free(&g, 1.3).with_potential(v);
        let k = short_time_kernel_matrix(&g, &h, 0.21).unwrap();
        let err = max_abs_entry(&(k.adjoint() * &k - DMatrix::identity(8, 8)));
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn kernel_power_matches_repeated_steps() {
        let g = SpatialGrid::new(4.0, 8).unwrap();
        let v: Vec<f64> = g.coordinates().iter().map(|q| q.sin()).collect();
        let h = HamiltonianSpec::free(&g, 1.0).with_potential(v);
        let dt = 0.05;
        let k = short_time_kernel_matrix(&g, &h, dt).unwrap();
        let psi0 = QuantumState::gaussian(&g, 0.2, 0.6, 0.4, 1.0);
        let mut via_kernel = nalgebra::DVector::from_column_slice(psi0.amplitudes());
        let mut via_steps = psi0.clone();
        let u = UnitaryPropagator::new(&g, &h, dt).unwrap();
        for _ in 0..16 {
            via_kernel = &k * via_kernel;
            via_steps = u.step(&via_steps).unwrap();
        }
        let d = crate::numerics::max_abs_diff(via_kernel.as_slice(), via_steps.amplitudes());
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn sandwich_matches_pure_state_propagation() {
        let (g, h) = free_grid(16);
        let psi = QuantumState::gaussian(&g, 0.3, 0.8, 1.0, 1.0);
        let u = UnitaryPropagator::new(&g, &h, 0.3).unwrap();
        let mut rho = crate::DensityMatrixGrid::from_pure(&psi).into_entries();
        u.sandwich(&mut rho);
        let expected = crate::DensityMatrixGrid::from_pure(&u.step(&psi).unwrap());
        assert!(max_abs_entry(&(rho - expected.entries())) < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn step_preserves_norm(
            re in prop::collection::vec(-1.0f64..1.0, 32),
            im in prop::collection::vec(-1.0f64..1.0, 32),
            v in prop::collection::vec(-5.0f64..5.0, 32),
            dt in 0.0f64..2.0,
            mass in 0.1f64..10.0,
        ) {
            let g = SpatialGrid::new(10.0, 32).unwrap();
            let h = HamiltonianSpec::free(&g, mass).with_potential(v);
            let amps: Vec<C64> = re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)).collect();
            let psi = QuantumState::new(amps, g.spacing()).unwrap();
            prop_assume!(psi.norm_sq() > 1e-6);
            let out = unitary_step(&psi, &g, &h, dt).unwrap();
            prop_assert!((out.norm_sq() - psi.norm_sq()).abs() <= 1e-12 * psi.norm_sq().max(1.0));
        }
    }
}
