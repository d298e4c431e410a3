//! Continuous quantum measurement in the restricted-path-integral picture.
//!
//! A monitored particle on a periodic 1-D lattice is evolved either
//! selectively (conditioned on a readout `[a]`) or non-selectively
//! (readout-averaged density matrix). Both ideal time resolution and a
//! finite resolution set by a coarse-graining form-factor are supported:
//!
//! * [`lattice`]: grids, states, the split-operator unitary step and its
//!   explicit kernel matrix.
//! * [`readout`]: readouts, form-factors, Gaussian weight functionals and
//!   readout sampling.
//! * [`selective`]: effective-Hamiltonian stepping, the windowed transfer
//!   contraction for time-nonlocal weights, and its Monte Carlo estimator.
//! * [`nonselective`]: master equation, readout averaging, generalized
//!   unitarity diagnostics, influence functionals and superpropagation.
//! * [`medium`]: the oscillator-medium model and its reduction to the
//!   coarse-grained influence functional.

pub mod error;
pub mod lattice;
pub mod medium;
pub mod nonselective;
pub mod numerics;
pub mod quadrature;
pub mod readout;
pub mod selective;
pub mod table;
mod transfer;

pub use error::{Error, Result};
pub use lattice::{
    build_grids, short_time_kernel_matrix, unitary_step, DensityMatrixGrid, GridParams,
    HamiltonianSpec, MonitoredSystem, ObservableSpec, QuantumState, SpatialGrid, TimeGrid,
    UnitaryPropagator,
};
pub use readout::{
    DiscretePath, FormFactor, FormFactorKind, LatticePath, Measurement, ReadoutTrajectory,
};
pub use transfer::{WindowSpec, AUGMENTED_DIMENSION_CAP};

pub use num_complex::Complex64 as C64;
