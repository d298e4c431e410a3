use crate::error::{Error, Result};
use crate::lattice::ObservableSpec;

/// Observable values `A_i` along a path, one per time step (sampled at the
/// step midpoint, piecewise constant on the step).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    values: Vec<f64>,
}

impl DiscretePath {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(steps: usize, value: f64) -> Self {
        Self {
            values: vec![value; steps],
        }
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

/// A lattice path as grid indices at the step midpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticePath {
    pub indices: Vec<usize>,
}

impl LatticePath {
    pub fn observe(&self, observable: &ObservableSpec) -> Result<DiscretePath> {
        let values = observable.values();
        self.indices
            .iter()
            .map(|&k| {
                values.get(k).copied().ok_or_else(|| {
                    Error::DimensionMismatch(format!(
                        "path index {k} outside a {}-point grid",
                        values.len()
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()
            .map(DiscretePath::new)
    }
}
