use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::{ObservableSpec, SpatialGrid};
use crate::error::{Error, Result};

/// Complex amplitudes on the grid with norm `‖ψ‖² = Σ |ψ_k|² Δq`.
///
/// States are allowed to carry a sub-unit norm: after selective evolution
/// it is the readout probability density.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<C64>,
    spacing: f64,
}

impl QuantumState {
    pub fn new(amplitudes: Vec<C64>, spacing: f64) -> Result<Self> {
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "amplitudes",
                reason: "must be finite".into(),
            });
        }
        Ok(Self {
            amplitudes,
            spacing,
        })
    }

    /// Normalized Gaussian wavepacket `exp(-(q-q0)²/4σ² + i p0 q / ħ)`.
    pub fn gaussian(grid: &SpatialGrid, center: f64, width: f64, momentum: f64, hbar: f64) -> Self {
        let amplitudes = grid
            .coordinates()
            .iter()
            .map(|&q| {
                let d = q - center;
                C64::from_polar((-d * d / (4.0 * width * width)).exp(), momentum * q / hbar)
            })
            .collect();
        Self {
            amplitudes,
            spacing: grid.spacing(),
        }
        .normalized()
    }

    /// Normalized position eigenvector at grid index `k`.
    pub fn position_basis(grid: &SpatialGrid, k: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); grid.points()];
        amplitudes[k] = C64::new(1.0 / grid.spacing().sqrt(), 0.0);
        Self {
            amplitudes,
            spacing: grid.spacing(),
        }
    }

    /// Normalized plane wave with FFT mode index `j`.
    pub fn momentum_mode(grid: &SpatialGrid, j: usize) -> Self {
        let k = grid.wavenumbers()[j];
        let a = 1.0 / grid.extent().sqrt();
        let amplitudes = grid
            .coordinates()
            .iter()
            .map(|&q| C64::from_polar(a, k * q))
            .collect();
        Self {
            amplitudes,
            spacing: grid.spacing(),
        }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.spacing
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm_sq().sqrt();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
        self
    }

    /// `⟨A⟩` for a normalized-or-not state (divides by the norm).
    pub fn expectation(&self, observable: &ObservableSpec) -> f64 {
        let w: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        self.amplitudes
            .iter()
            .zip(observable.values())
            .map(|(a, v)| a.norm_sqr() * v)
            .sum::<f64>()
            / w
    }

    /// Position variance on the periodic grid, measured with minimum-image
    /// distances around the circular mean.
    pub fn periodic_position_variance(&self, grid: &SpatialGrid) -> f64 {
        let l = grid.extent();
        let two_pi = 2.0 * std::f64::consts::PI;
        let probs: Vec<f64> = self.amplitudes.iter().map(|a| a.norm_sqr()).collect();
        let total: f64 = probs.iter().sum();
        let (s, c) = probs
            .iter()
            .zip(grid.coordinates())
            .fold((0.0, 0.0), |(s, c), (p, q)| {
                let phi = two_pi * q / l;
                (s + p * phi.sin(), c + p * phi.cos())
            });
        let mean = s.atan2(c) * l / two_pi;
        probs
            .iter()
            .zip(grid.coordinates())
            .map(|(p, q)| {
                let d = (q - mean + 0.5 * l).rem_euclid(l) - 0.5 * l;
                p * d * d
            })
            .sum::<f64>()
            / total
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.spacing
    }
}

/// Density matrix over grid pairs, `tr ρ = Σ ρ_kk Δq`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrixGrid {
    entries: DMatrix<C64>,
    spacing: f64,
}

impl DensityMatrixGrid {
    pub fn new(entries: DMatrix<C64>, spacing: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch("density matrix must be square".into()));
        }
        Ok(Self { entries, spacing })
    }

    pub fn from_pure(state: &QuantumState) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self {
            entries: &v * v.adjoint(),
            spacing: state.spacing(),
        }
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace() * self.spacing
    }

    /// `tr ρ²` in the grid measure.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spacing * self.spacing
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                err = err.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// Smallest eigenvalue of the trace-normalized operator `ρ Δq / tr ρ`.
    pub fn min_eigenvalue(&self) -> f64 {
        let tr = self.trace().re;
        let scaled = self.entries.map(|z| z * (self.spacing / tr));
        // Symmetrize so round-off asymmetry does not leak into the solver.
        let herm = (&scaled + scaled.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.min()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Conditional position variance diagnostics use the diagonal only.
    pub fn diagonal_probabilities(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| self.entries[(k, k)].re * self.spacing)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_is_normalized() {
        let g = SpatialGrid::new(20.0, 128).unwrap();
        let psi = QuantumState::gaussian(&g, 0.5, 1.0, 0.3, 1.0);
        assert!((psi.norm_sq() - 1.0).abs() < 1e-14);
        let rho = DensityMatrixGrid::from_pure(&psi);
        assert!((rho.trace().re - 1.0).abs() < 1e-13);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!(rho.hermiticity_error() < 1e-15);
        assert!(rho.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn periodic_variance_of_wrapped_gaussian() {
        let g = SpatialGrid::new(20.0, 256).unwrap();
        // Centered on the seam; minimum-image variance must still be σ².
        let psi = QuantumState::gaussian(&g, -10.0, 0.7, 0.0, 1.0);
        let psi_wrapped = {
            let mut a = psi.amplitudes().to_vec();
            let shifted = QuantumState::gaussian(&g, 10.0, 0.7, 0.0, 1.0);
            for (x, y) in a.iter_mut().zip(shifted.amplitudes()) {
                *x += y;
            }
            QuantumState::new(a, g.spacing()).unwrap().normalized()
        };
        let v = psi_wrapped.periodic_position_variance(&g);
        assert!((v - 0.49).abs() < 1e-3, "{v}");
    }
}
