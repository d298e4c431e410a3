//! Readouts, time coarse-graining and the weight functionals that restrict
//! the path integral.

mod formfactor;
mod path;
mod sampling;
mod trajectory;
mod weight;

pub use formfactor::{FormFactor, FormFactorKind, LagTable, GAUSSIAN_SUPPORT};
pub use path::{DiscretePath, LatticePath};
pub use sampling::{
    readout_measure_factor, sample_readout, sample_readout_into, seeded_rng, ProposalDensity,
};
pub use trajectory::{Measurement, ReadoutTrajectory};
pub use weight::{log_weight_coarse, log_weight_ideal, weight_coarse, weight_ideal};
