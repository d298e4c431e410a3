use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::TimeGrid;
use crate::readout::FormFactor;

/// Two-time kernel over the step midpoints with the quadrature weight folded
/// in: `M_jk = K(t_j, t_k) Δt`, so `∫∫ K X dt dt' ≈ Σ_jk M_jk X_jk Δt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimeKernel {
    weights: DMatrix<f64>,
    band: usize,
}

impl TwoTimeKernel {
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        if !weights.is_square() {
            return Err(Error::DimensionMismatch("two-time kernel must be square".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NotNormalizable("two-time kernel has non-finite entries".into()));
        }
        let n = weights.nrows();
        let mut band = 0;
        for j in 0..n {
            for k in 0..n {
                if weights[(j, k)] != 0.0 {
                    band = band.max(j.abs_diff(k));
                }
            }
        }
        Ok(Self { weights, band })
    }

    /// `K(t, t') = δ(t - t')`.
    pub fn delta(time: &TimeGrid) -> Self {
        let n = time.steps();
        Self {
            weights: DMatrix::identity(n, n),
            band: 0,
        }
    }

    /// Stationary kernel `K(t, t') = profile(t - t')`, zero beyond `cutoff`.
    pub fn stationary(time: &TimeGrid, profile: impl Fn(f64) -> f64, cutoff: f64) -> Result<Self> {
        let n = time.steps();
        let dt = time.dt();
        let reach = cutoff * (1.0 + 1e-12);
        let lags: Vec<f64> = (0..n)
            .map(|l| {
                let t = l as f64 * dt;
                if t <= reach {
                    profile(t) * dt
                } else {
                    0.0
                }
            })
            .collect();
        Self::from_weights(DMatrix::from_fn(n, n, |j, k| lags[j.abs_diff(k)]))
    }

    /// `M = Pᵀ P` for a factor `P = Π_t`.
    pub fn factorized(factor: &FormFactor) -> Result<Self> {
        let p = factor.to_dense();
        Self::from_weights(p.transpose() * p)
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn steps(&self) -> usize {
        self.weights.nrows()
    }

    /// Largest `|j - k|` with `M_jk ≠ 0`.
    pub fn band(&self) -> usize {
        self.band
    }

    pub fn is_symmetric(&self) -> bool {
        self.weights == self.weights.transpose()
    }

    pub(crate) fn expect_steps(&self, steps: usize) -> Result<()> {
        if self.steps() != steps {
            return Err(Error::DimensionMismatch(format!(
                "two-time kernel has {} samples, paths have {steps}",
                self.steps()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorized_delta_is_identity() {
        let time = TimeGrid::new(1.0, 16).unwrap();
        let k = TwoTimeKernel::factorized(&FormFactor::delta(&time)).unwrap();
        assert_eq!(k, TwoTimeKernel::delta(&time));
    }

    #[test]
    fn factorized_gaussian_approximates_stationary_gaussian() {
        let time = TimeGrid::new(1.0, 128).unwrap();
        let dt = time.dt();
        let tau = 8.0 * dt;
        let p = FormFactor::gaussian(&time, tau / 2f64.sqrt()).unwrap();
        let k = TwoTimeKernel::factorized(&p).unwrap();
        let norm = (2.0 * std::f64::consts::PI).sqrt() * tau;
        let want =
            TwoTimeKernel::stationary(&time, |t| (-t * t / (2.0 * tau * tau)).exp() / norm, 5.0 * tau)
                .unwrap();
        assert!(k.is_symmetric());
        for j in 40..88 {
            for l in 0..20 {
                let d = (k.weights()[(j, j + l)] - want.weights()[(j, j + l)]).abs();
                assert!(d < 1e-6, "{j} {l}: {d}");
            }
        }
    }
}
