//! Discretization substrate: grids, states, operators and the short-time
//! unitary kernel.

mod grid;
mod hamiltonian;
mod propagator;
mod state;
mod system;

pub use grid::{build_grids, GridParams, SpatialGrid, TimeGrid};
pub use hamiltonian::{HamiltonianSpec, ObservableSpec};
pub use propagator::{
    kernel_matrix, short_time_kernel_matrix, unitary_step, UnitaryPropagator, KERNEL_ORACLE_CAP,
};
pub use state::{DensityMatrixGrid, QuantumState};
pub use system::MonitoredSystem;
