use crate::error::{ensure_positive, Error, Result};

/// Readout `[a]`: one value per time step, piecewise constant on the step.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutTrajectory {
    values: Vec<f64>,
}

impl ReadoutTrajectory {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "readout",
                reason: "entries must be finite".into(),
            });
        }
        Ok(Self { values })
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

    pub(crate) fn expect_len(&self, steps: usize) -> Result<()> {
        if self.values.len() == steps {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "readout has {} entries for {} time steps",
                self.values.len(),
                steps
            )))
        }
    }
}

/// Measurement strength. `κ = 1 / (T Δa_T²)` links it to the measurement
/// error `Δa_T` accumulated over a duration `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    kappa: f64,
}

impl Measurement {
    pub fn from_kappa(kappa: f64) -> Result<Self> {
        ensure_positive("kappa", kappa)?;
        Ok(Self { kappa })
    }

    pub fn from_error(error: f64, duration: f64) -> Result<Self> {
        ensure_positive("measurement error", error)?;
        ensure_positive("duration", duration)?;
        Ok(Self {
            kappa: 1.0 / (duration * error * error),
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `Δa_T` for the given duration.
    pub fn error(&self, duration: f64) -> f64 {
        (1.0 / (self.kappa * duration)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameterizations_agree() {
        let m = Measurement::from_error(0.3, 2.5).unwrap();
        let t = 2.5;
        assert!((m.kappa() * t * m.error(t).powi(2) - 1.0).abs() < 1e-14);
        let m2 = Measurement::from_kappa(m.kappa()).unwrap();
        assert!((m2.error(t) - 0.3).abs() < 1e-14);
        assert!(Measurement::from_kappa(0.0).is_err());
    }
}
