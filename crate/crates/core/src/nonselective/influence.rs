use crate::error::{ensure_non_negative, Error, Result};
use crate::medium::{log_influence_exact, log_influence_firstorder, MediumFormFactor, PathPair3, TwoTimeKernel};
use crate::readout::{DiscretePath, FormFactor};

/// Influence functional weighting the doubled path integral.
#[derive(Debug, Clone, PartialEq)]
pub enum InfluenceKernel {
    /// `exp[-(κ/2) Σ (A - A')² Δt]`.
    Ideal { kappa: f64 },
    /// Same with coarse-grained values `Ā`, `Ā'`.
    Coarse { kappa: f64, form_factor: FormFactor },
    /// Oscillator medium with Gaussian interaction of range `l`.
    MediumExact {
        kappa: f64,
        range: f64,
        kernel: TwoTimeKernel,
    },
    /// Oscillator medium expanded to first order in `Δr²/l²`.
    MediumFirstOrder { kappa: f64, kernel: TwoTimeKernel },
}

impl InfluenceKernel {
    pub fn medium_exact(medium: &MediumFormFactor) -> Self {
        Self::MediumExact {
            kappa: medium.kappa,
            range: medium.range,
            kernel: medium.kernel.clone(),
        }
    }

    pub fn medium_firstorder(medium: &MediumFormFactor) -> Self {
        Self::MediumFirstOrder {
            kappa: medium.kappa,
            kernel: medium.kernel.clone(),
        }
    }

    pub fn kappa(&self) -> f64 {
        match self {
            Self::Ideal { kappa }
            | Self::Coarse { kappa, .. }
            | Self::MediumExact { kappa, .. }
            | Self::MediumFirstOrder { kappa, .. } => *kappa,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ideal { .. } => "ideal",
            Self::Coarse { .. } => "coarse",
            Self::MediumExact { .. } => "medium_exact",
            Self::MediumFirstOrder { .. } => "medium_firstorder",
        }
    }

    /// Past slices a single weight term reaches back over.
    pub fn window(&self) -> usize {
        match self {
            Self::Ideal { .. } => 0,
            Self::Coarse { form_factor, .. } => {
                form_factor.lower_bandwidth() + form_factor.upper_bandwidth()
            }
            Self::MediumExact { kernel, .. } | Self::MediumFirstOrder { kernel, .. } => kernel.band(),
        }
    }

    pub fn validate(&self, steps: usize) -> Result<()> {
        ensure_non_negative("kappa", self.kappa())?;
        let have = match self {
            Self::Ideal { .. } => steps,
            Self::Coarse { form_factor, .. } => form_factor.steps(),
            Self::MediumExact { kernel, range, .. } => {
                crate::error::ensure_positive("range", *range)?;
                kernel.steps()
            }
            Self::MediumFirstOrder { kernel, .. } => kernel.steps(),
        };
        if have != steps {
            return Err(Error::DimensionMismatch(format!(
                "{} kernel has {have} samples, expected {steps}",
                self.name()
            )));
        }
        Ok(())
    }
}

/// Log of [`influence_eval`].
pub fn log_influence(
    q: &DiscretePath,
    q_prime: &DiscretePath,
    kernel: &InfluenceKernel,
    dt: f64,
) -> Result<f64> {
    if q.len() != q_prime.len() {
        return Err(Error::DimensionMismatch(format!(
            "paths have {} and {} samples",
            q.len(),
            q_prime.len()
        )));
    }
    kernel.validate(q.len())?;
    ensure_non_negative("dt", dt)?;
    let squared = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum() };
    match kernel {
        InfluenceKernel::Ideal { kappa } => Ok(-0.5 * kappa * squared(q.values(), q_prime.values()) * dt),
        InfluenceKernel::Coarse { kappa, form_factor } => {
            let a = form_factor.coarse_grain_values(q.values());
            let b = form_factor.coarse_grain_values(q_prime.values());
            Ok(-0.5 * kappa * squared(&a, &b) * dt)
        }
        InfluenceKernel::MediumExact {
            kappa,
            range,
            kernel,
        } => log_influence_exact(&PathPair3::from_paths(q, q_prime)?, kernel, *kappa, *range, dt),
        InfluenceKernel::MediumFirstOrder { kappa, kernel } => {
            log_influence_firstorder(&PathPair3::from_paths(q, q_prime)?, kernel, *kappa, dt)
        }
    }
}

/// Influence functional `W[q | q']` for a pair of observable paths.
pub fn influence_eval(
    q: &DiscretePath,
    q_prime: &DiscretePath,
    kernel: &InfluenceKernel,
    dt: f64,
) -> Result<f64> {
    log_influence(q, q_prime, kernel, dt).map(f64::exp)
}
