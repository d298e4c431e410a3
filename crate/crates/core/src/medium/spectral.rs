use std::f64::consts::PI;

use super::TwoTimeKernel;
use crate::error::{ensure_non_negative, ensure_positive, invalid, Error, Result};
use crate::lattice::TimeGrid;
use crate::quadrature::adaptive_simpson;

/// Frequency dependence of the particle–oscillator coupling `γ_ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingSpectrum {
    Constant { gamma: f64 },
    /// `γ_ω² = γ₀² ω exp[-(ω - ω₀)² / 2σ²]` (ω in the same units as σ), which
    /// makes `ν(ω)` a Gaussian band of centre ω₀ and width σ.
    GaussianBand { gamma0: f64, center: f64, width: f64 },
}

impl CouplingSpectrum {
    pub fn gamma_sq(&self, omega: f64) -> f64 {
        match *self {
            Self::Constant { gamma } => gamma * gamma,
            Self::GaussianBand {
                gamma0,
                center,
                width,
            } => {
                let d = omega - center;
                gamma0 * gamma0 * omega * (-d * d / (2.0 * width * width)).exp()
            }
        }
    }
}

/// Medium of oscillator "atoms" with density `n`, interaction range `l`
/// and oscillator mass `m_osc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumSpec {
    pub density: f64,
    pub range: f64,
    pub oscillator_mass: f64,
    pub hbar: f64,
    pub coupling: CouplingSpectrum,
}

impl MediumSpec {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("density", self.density)?;
        ensure_positive("range", self.range)?;
        ensure_positive("oscillator_mass", self.oscillator_mass)?;
        ensure_positive("hbar", self.hbar)?;
        match self.coupling {
            CouplingSpectrum::Constant { gamma } => ensure_non_negative("gamma", gamma.abs()),
            CouplingSpectrum::GaussianBand {
                gamma0,
                center,
                width,
            } => {
                ensure_non_negative("gamma0", gamma0.abs())?;
                ensure_non_negative("center", center)?;
                ensure_positive("width", width)
            }
        }
    }

    /// `n (πl²/2)^{3/2} / (4ħ m_osc)`.
    fn prefactor(&self) -> f64 {
        self.density * (PI * self.range * self.range / 2.0).powf(1.5)
            / (4.0 * self.hbar * self.oscillator_mass)
    }
}

/// `ν(ω) = n (πl²/2)^{3/2} γ_ω² / (4ħ m_osc ω)`.
pub fn nu_of_omega(spec: &MediumSpec, omega: f64) -> Result<f64> {
    spec.validate()?;
    if !omega.is_finite() || omega <= 0.0 {
        return Err(invalid("omega", format!("must be finite and > 0, got {omega}")));
    }
    Ok(spec.prefactor() * spec.coupling.gamma_sq(omega) / omega)
}

/// Spectral density `ν(ω)` on `ω > 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity {
    Medium(MediumSpec),
    /// Linear interpolation of `(ω, ν)` samples, zero outside.
    Tabulated { omegas: Vec<f64>, values: Vec<f64> },
}

impl SpectralDensity {
    pub fn tabulated(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("spectral table", "needs at least two rows"));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.iter().any(|&(w, v)| !(w.is_finite() && v.is_finite()) || w < 0.0 || v < 0.0) {
            return Err(invalid("spectral table", "needs finite ω ≥ 0 and ν ≥ 0"));
        }
        let (omegas, values) = points.into_iter().unzip();
        Ok(Self::Tabulated { omegas, values })
    }

    pub fn eval(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Medium(spec) => spec.prefactor() * spec.coupling.gamma_sq(omega) / omega,
            Self::Tabulated { omegas, values } => {
                let last = omegas.len() - 1;
                if omega < omegas[0] || omega > omegas[last] {
                    return 0.0;
                }
                let k = omegas.partition_point(|&w| w <= omega).clamp(1, last);
                let (w0, w1) = (omegas[k - 1], omegas[k]);
                let s = if w1 > w0 { (omega - w0) / (w1 - w0) } else { 0.0 };
                values[k - 1] + s * (values[k] - values[k - 1])
            }
        }
    }

    /// Frequency interval carrying the band.
    pub fn support(&self) -> Result<(f64, f64)> {
        match self {
            Self::Medium(spec) => match spec.coupling {
                CouplingSpectrum::Constant { .. } => Err(Error::NotNormalizable(
                    "constant coupling gives ν ∝ 1/ω, which is not integrable".into(),
                )),
                CouplingSpectrum::GaussianBand { center, width, .. } => {
                    Ok(((center - 12.0 * width).max(0.0), center + 12.0 * width))
                }
            },
            Self::Tabulated { omegas, .. } => Ok((omegas[0], omegas[omegas.len() - 1])),
        }
    }

    /// Lag beyond which the cosine transform is treated as zero.
    pub fn default_cutoff(&self) -> Result<f64> {
        match self {
            Self::Medium(spec) => match spec.coupling {
                CouplingSpectrum::GaussianBand { width, .. } => Ok(9.0 / width),
                CouplingSpectrum::Constant { .. } => self.support().map(|_| 0.0),
            },
            Self::Tabulated { .. } => {
                let (lo, hi) = self.support()?;
                Ok(40.0 * PI / (hi - lo))
            }
        }
    }

    /// `g(t) = ∫ ν(ω) cos ωt dω`.
    pub fn cosine_transform(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.support()?;
        let scale = adaptive_simpson(|w| self.eval(w), lo, hi, 1e-12).abs().max(1e-300);
        Ok(adaptive_simpson(|w| self.eval(w) * (w * t).cos(), lo, hi, 1e-12 * scale))
    }
}

/// Form-factor and measurement strength induced by a medium.
#[derive(Debug, Clone)]
pub struct MediumFormFactor {
    /// `κ = (2/l²) ∫ g(t) dt`.
    pub kappa: f64,
    pub range: f64,
    pub cutoff: f64,
    pub kernel: TwoTimeKernel,
    density: SpectralDensity,
    norm: f64,
}

impl MediumFormFactor {
    /// `Π(t) = (2/κl²) g(t)`, normalized to unit integral.
    pub fn profile(&self, t: f64) -> f64 {
        if t.abs() > self.cutoff {
            return 0.0;
        }
        self.density.cosine_transform(t).unwrap_or(0.0) / self.norm
    }
}

/// Builds `Π` and `κ` from `ν(ω)` through the cosine transform and the
/// normalization `∫ Π dt = 1`.
pub fn form_factor_from_medium(
    density: &SpectralDensity,
    range: f64,
    time: &TimeGrid,
    cutoff: Option<f64>,
) -> Result<MediumFormFactor> {
    ensure_positive("range", range)?;
    let cutoff = match cutoff {
        Some(c) => c,
        None => density.default_cutoff()?,
    };
    ensure_positive("cutoff", cutoff)?;
    let g0 = density.cosine_transform(0.0)?;
    if g0 <= 0.0 {
        return Err(Error::NotNormalizable("spectral density integrates to zero".into()));
    }
    let g = |t: f64| density.cosine_transform(t).unwrap_or(f64::NAN);
    let norm = 2.0 * adaptive_simpson(g, 0.0, cutoff, 1e-10 * g0 * cutoff);
    if !norm.is_finite() || norm <= 1e-9 * g0 * cutoff {
        return Err(Error::NotNormalizable(format!(
            "cosine transform integrates to {norm:.3e}; the band must reach ω = 0"
        )));
    }
    let kappa = 2.0 * norm / (range * range);
    let kernel = TwoTimeKernel::stationary(time, |t| g(t) / norm, cutoff)?;
    Ok(MediumFormFactor {
        kappa,
        range,
        cutoff,
        kernel,
        density: density.clone(),
        norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_medium(coupling: CouplingSpectrum) -> MediumSpec {
        MediumSpec {
            density: 1.0,
            range: 1.0,
            oscillator_mass: 1.0,
            hbar: 1.0,
            coupling,
        }
    }

    #[test]
    fn nu_examples() {
        let spec = unit_medium(CouplingSpectrum::Constant { gamma: 1.0 });
        let want = (PI / 2.0).powf(1.5) / 4.0;
        assert!((nu_of_omega(&spec, 1.0).unwrap() - want).abs() < 1e-15);
        let zero = unit_medium(CouplingSpectrum::Constant { gamma: 0.0 });
        assert_eq!(nu_of_omega(&zero, 2.0).unwrap(), 0.0);
        let dense = MediumSpec {
            density: 2.0,
            ..spec
        };
        assert!((nu_of_omega(&dense, 1.3).unwrap() - 2.0 * nu_of_omega(&spec, 1.3).unwrap()).abs() < 1e-15);
        assert!(nu_of_omega(&spec, 0.0).is_err());
        assert!(nu_of_omega(&spec, -1.0).is_err());
    }

    #[test]
    fn gaussian_band_transform_is_gaussian() {
        let sigma = 2.0;
        let spec = unit_medium(CouplingSpectrum::GaussianBand {
            gamma0: 1.0,
            center: 0.0,
            width: sigma,
        });
        let nu0 = spec.prefactor();
        let density = SpectralDensity::Medium(spec);
        for t in [0.0, 0.3, 1.0, 2.0] {
            let want = (PI / 2.0).sqrt() * sigma * nu0 * (-sigma * sigma * t * t / 2.0).exp();
            let got = density.cosine_transform(t).unwrap();
            assert!((got - want).abs() < 1e-10, "{t}: {got} vs {want}");
        }
    }

    #[test]
    fn kappa_from_normalization() {
        let spec = unit_medium(CouplingSpectrum::GaussianBand {
            gamma0: 1.0,
            center: 0.0,
            width: 4.0,
        });
        let time = TimeGrid::new(1.0, 64).unwrap();
        let mf = form_factor_from_medium(&SpectralDensity::Medium(spec), 1.3, &time, None).unwrap();
        let want = 2.0 * PI * spec.prefactor() / (1.3 * 1.3);
        assert!((mf.kappa - want).abs() < 1e-8 * want, "{} vs {want}", mf.kappa);
        assert!((mf.profile(0.0) - 4.0 / (2.0 * PI).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn off_zero_band_not_normalizable() {
        let spec = unit_medium(CouplingSpectrum::GaussianBand {
            gamma0: 1.0,
            center: 30.0,
            width: 1.0,
        });
        let time = TimeGrid::new(1.0, 16).unwrap();
        assert!(matches!(
            form_factor_from_medium(&SpectralDensity::Medium(spec), 1.0, &time, None),
            Err(Error::NotNormalizable(_))
        ));
        let constant = unit_medium(CouplingSpectrum::Constant { gamma: 1.0 });
        assert!(form_factor_from_medium(&SpectralDensity::Medium(constant), 1.0, &time, None).is_err());
    }
}
