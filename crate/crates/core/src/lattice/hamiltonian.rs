use super::SpatialGrid;
use crate::error::{ensure_positive, invalid, Error, Result};

/// Time-independent `H = p²/2m + V(q)` on a grid.
///
/// `kinetic = false` drops the `p²/2m` term, which gives an `H` that is
/// diagonal in position (and `H = 0` when `V` also vanishes).
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub mass: f64,
    pub hbar: f64,
    pub potential: Vec<f64>,
    pub kinetic: bool,
}

impl HamiltonianSpec {
    pub fn free(grid: &SpatialGrid, mass: f64) -> Self {
        Self {
            mass,
            hbar: 1.0,
            potential: vec![0.0; grid.points()],
            kinetic: true,
        }
    }

    pub fn harmonic(grid: &SpatialGrid, mass: f64, omega: f64) -> Self {
        let potential = grid
            .coordinates()
            .iter()
            .map(|q| 0.5 * mass * omega * omega * q * q)
            .collect();
        Self {
            mass,
            hbar: 1.0,
            potential,
            kinetic: true,
        }
    }

    /// `H = 0`.
    pub fn zero(grid: &SpatialGrid) -> Self {
        Self {
            mass: 1.0,
            hbar: 1.0,
            potential: vec![0.0; grid.points()],
            kinetic: false,
        }
    }

    /// Position-diagonal `H = V(q)`; commutes with any position-diagonal observable.
    pub fn potential_only(potential: Vec<f64>) -> Self {
        Self {
            mass: 1.0,
            hbar: 1.0,
            potential,
            kinetic: false,
        }
    }

    pub fn with_potential(mut self, potential: Vec<f64>) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn validate(&self, grid: &SpatialGrid) -> Result<()> {
        ensure_positive("mass", self.mass)?;
        ensure_positive("hbar", self.hbar)?;
        if self.potential.len() != grid.points() {
            return Err(Error::DimensionMismatch(format!(
                "potential has {} values for a {}-point grid",
                self.potential.len(),
                grid.points()
            )));
        }
        if self.potential.iter().any(|v| !v.is_finite()) {
            return Err(invalid("potential", "must be finite on the grid"));
        }
        Ok(())
    }
}

/// Position-diagonal observable `A(q)` sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSpec {
    values: Vec<f64>,
}

impl ObservableSpec {
    pub fn position(grid: &SpatialGrid) -> Self {
        Self {
            values: grid.coordinates().to_vec(),
        }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("observable", "must be finite"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
