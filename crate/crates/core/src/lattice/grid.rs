use crate::error::{ensure_positive, Error, Result};
use crate::numerics::is_power_of_two;

/// Uniform periodic grid on `[-L/2, L/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    extent: f64,
    spacing: f64,
    coordinates: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(extent: f64, points: usize) -> Result<Self> {
        ensure_positive("extent", extent)?;
        if points < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {points}"
            )));
        }
        let spacing = extent / points as f64;
        let coordinates = (0..points)
            .map(|k| -0.5 * extent + k as f64 * spacing)
            .collect();
        Ok(Self {
            extent,
            spacing,
            coordinates,
        })
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points(&self) -> usize {
        self.coordinates.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.coordinates
    }

    /// Angular wavenumbers in FFT order (`0, 1, .., n/2-1, -n/2, .., -1`) times `2π/L`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points() as i64;
        let dk = 2.0 * std::f64::consts::PI / self.extent;
        (0..n)
            .map(|j| {
                let m = if j < (n + 1) / 2 { j } else { j - n };
                m as f64 * dk
            })
            .collect()
    }
}

/// Uniform time axis with `steps` intervals of length `dt`.
///
/// Per-step quantities (readouts, the observable along a path) are sampled
/// at the step midpoints `(i + 1/2) dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    duration: f64,
    steps: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(duration: f64, steps: usize) -> Result<Self> {
        ensure_positive("duration", duration)?;
        if steps == 0 {
            return Err(Error::InvalidGrid("time grid needs at least one step".into()));
        }
        Ok(Self {
            duration,
            steps,
            dt: duration / steps as f64,
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Slice boundary `t_i = i dt`, `i = 0..=N`.
    pub fn instant(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// Midpoint of step `i`.
    pub fn sample_instant(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dt
    }

    pub fn sample_instants(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.sample_instant(i)).collect()
    }

    /// Same duration, `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.duration, self.steps * factor)
    }
}

/// Raw grid parameters as they appear in a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub extent: f64,
    pub points: usize,
    pub duration: f64,
    pub steps: usize,
}

/// Builds both grids, requiring a power-of-two spatial size.
pub fn build_grids(params: &GridParams) -> Result<(SpatialGrid, TimeGrid)> {
    if !is_power_of_two(params.points) {
        return Err(Error::InvalidGrid(format!(
            "number of points must be a power of two, got {}",
            params.points
        )));
    }
    Ok((
        SpatialGrid::new(params.extent, params.points)?,
        TimeGrid::new(params.duration, params.steps)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(extent: f64, points: usize, duration: f64, steps: usize) -> GridParams {
        GridParams {
            extent,
            points,
            duration,
            steps,
        }
    }

    #[test]
    fn spatial_grid_arithmetic() {
        let (g, _) = build_grids(&params(8.0, 4, 1.0, 1)).unwrap();
        assert_eq!(g.spacing(), 2.0);
        assert_eq!(g.coordinates(), &[-4.0, -2.0, 0.0, 2.0]);
        assert!((g.spacing() * g.points() as f64 - g.extent()).abs() < 1e-15);
    }

    #[test]
    fn time_grid_arithmetic() {
        let (_, t) = build_grids(&params(8.0, 4, 1.0, 10)).unwrap();
        assert!((t.dt() - 0.1).abs() < 1e-15);
        assert!((t.dt() * t.steps() as f64 - 1.0).abs() < 1e-15);
        assert!((t.sample_instant(0) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_grids(&params(8.0, 3, 1.0, 10)).is_err());
        assert!(build_grids(&params(-1.0, 4, 1.0, 10)).is_err());
        assert!(build_grids(&params(8.0, 4, 0.0, 10)).is_err());
        assert!(build_grids(&params(8.0, 4, 1.0, 0)).is_err());
        assert!(SpatialGrid::new(1.0, 1).is_err());
    }

    #[test]
    fn coordinates_uniform_and_increasing() {
        let g = SpatialGrid::new(3.0, 6).unwrap();
        for w in g.coordinates().windows(2) {
            assert!((w[1] - w[0] - g.spacing()).abs() < 1e-14);
        }
    }

    #[test]
    fn wavenumbers_fft_order() {
        let g = SpatialGrid::new(2.0 * std::f64::consts::PI, 4).unwrap();
        let k = g.wavenumbers();
        let expected = [0.0, 1.0, -2.0, -1.0];
        for (a, b) in k.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
