//! Oscillator-medium model of a continuous position measurement and its
//! reduction to the coarse-grained influence functional.

mod influence;
mod kernel;
mod reduction;
mod spectral;

pub use influence::{
    influence_exact, influence_firstorder, influence_single_frequency, log_influence_exact,
    log_influence_firstorder, log_influence_single_frequency, verify_r2_identity, PathPair3,
    R2Check,
};
pub use kernel::TwoTimeKernel;
pub use reduction::{
    displacement_sweep, fit_validity_curve, reduce_to_phenomenological, taylor_remainder_bound,
    Reduction, SweepPoint, ValidityFit,
};
pub use spectral::{
    form_factor_from_medium, nu_of_omega, CouplingSpectrum, MediumFormFactor, MediumSpec,
    SpectralDensity,
};
