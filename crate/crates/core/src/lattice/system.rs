use super::{HamiltonianSpec, ObservableSpec, SpatialGrid, TimeGrid};
use crate::error::{ensure_non_negative, Error, Result};

/// Everything an engine needs to know about the monitored system: grids,
/// `H`, the position-diagonal observable `A` and the measurement strength κ.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitoredSystem {
    pub grid: SpatialGrid,
    pub time: TimeGrid,
    pub hamiltonian: HamiltonianSpec,
    pub observable: ObservableSpec,
    pub kappa: f64,
}

impl MonitoredSystem {
    pub fn new(
        grid: SpatialGrid,
        time: TimeGrid,
        hamiltonian: HamiltonianSpec,
        observable: ObservableSpec,
        kappa: f64,
    ) -> Result<Self> {
        hamiltonian.validate(&grid)?;
        ensure_non_negative("kappa", kappa)?;
        if observable.len() != grid.points() {
            return Err(Error::DimensionMismatch(format!(
                "observable has {} values for a {}-point grid",
                observable.len(),
                grid.points()
            )));
        }
        Ok(Self {
            grid,
            time,
            hamiltonian,
            observable,
            kappa,
        })
    }

    /// Position observable, the common case.
    pub fn monitoring_position(
        grid: SpatialGrid,
        time: TimeGrid,
        hamiltonian: HamiltonianSpec,
        kappa: f64,
    ) -> Result<Self> {
        let observable = ObservableSpec::position(&grid);
        Self::new(grid, time, hamiltonian, observable, kappa)
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        Self {
            kappa,
            ..self.clone()
        }
    }

    pub fn with_time(&self, time: TimeGrid) -> Self {
        Self {
            time,
            ..self.clone()
        }
    }

    pub fn dt(&self) -> f64 {
        self.time.dt()
    }

    pub fn points(&self) -> usize {
        self.grid.points()
    }
}
