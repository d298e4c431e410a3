use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DiscretePath, ReadoutTrajectory};
use crate::error::{invalid, Result};

/// Deterministic generator for `(seed, stream)`. Parallel workers take
/// disjoint streams of the same seed.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-step normalization `c = sqrt(2κΔt/π)` of the readout measure, the
/// constant for which `∫ c exp[-2κΔt (A - a)²] da = 1`.
pub fn readout_measure_factor(kappa: f64, dt: f64) -> Result<f64> {
    let x = kappa * dt;
    if !x.is_finite() || x <= 0.0 {
        return Err(invalid("kappa*dt", format!("must be > 0, got {x}")));
    }
    Ok((2.0 * x / std::f64::consts::PI).sqrt())
}

/// Density of a sampled readout under the proposal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalDensity {
    pub log_density: f64,
}

/// Draws `a_i ~ N(mean_i, 1/(4κΔt))` independently.
pub fn sample_readout(
    mean_path: &DiscretePath,
    kappa: f64,
    dt: f64,
    seed: u64,
) -> Result<(ReadoutTrajectory, ProposalDensity)> {
    let mut rng = seeded_rng(seed, 0);
    let mut values = Vec::with_capacity(mean_path.len());
    let density = sample_readout_into(&mut rng, mean_path.values(), kappa, dt, &mut values)?;
    Ok((ReadoutTrajectory::new(values)?, density))
}

/// Streaming form of [`sample_readout`] for use inside estimators.
pub fn sample_readout_into<R: rand::Rng + ?Sized>(
    rng: &mut R,
    mean: &[f64],
    kappa: f64,
    dt: f64,
    out: &mut Vec<f64>,
) -> Result<ProposalDensity> {
    let c = readout_measure_factor(kappa, dt)?;
    let precision = 4.0 * kappa * dt;
    let sd = precision.sqrt().recip();
    out.clear();
    let mut log_density = 0.0;
    for &mu in mean {
        let z: f64 = StandardNormal.sample(rng);
        out.push(mu + sd * z);
        // N(μ, 1/(4κΔt)) has density c · exp[-2κΔt (a-μ)²].
        log_density += c.ln() - 0.5 * z * z;
    }
    Ok(ProposalDensity { log_density })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;

    #[test]
    fn measure_factor_values() {
        let c = readout_measure_factor(std::f64::consts::FRAC_PI_2, 1.0).unwrap();
        assert!((c - 1.0).abs() < 1e-15);
        assert!(readout_measure_factor(0.0, 1.0).is_err());
    }

    #[test]
    fn measure_factor_normalizes_gaussian() {
        let (kappa, dt) = (1.3, 0.07);
        let c = readout_measure_factor(kappa, dt).unwrap();
        let width = (1.0 / (4.0 * kappa * dt)).sqrt();
        for x in [-2.0, 0.0, 0.3, 5.0] {
            let v = adaptive_simpson(
                |a| c * (-2.0 * kappa * dt * (x - a) * (x - a)).exp(),
                x - 40.0 * width,
                x + 40.0 * width,
                1e-14,
            );
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let mean = DiscretePath::new(vec![0.0, 1.0, -1.0, 0.5]);
        let (a, pa) = sample_readout(&mean, 2.0, 0.1, 42).unwrap();
        let (b, pb) = sample_readout(&mean, 2.0, 0.1, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(pa.log_density.to_bits(), pb.log_density.to_bits());
        let (c, _) = sample_readout(&mean, 2.0, 0.1, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn strong_measurement_collapses_to_mean() {
        let mean = DiscretePath::new(vec![0.25, -0.75]);
        let (a, _) = sample_readout(&mean, 1e14, 0.1, 7).unwrap();
        for (x, m) in a.values().iter().zip(mean.values()) {
            assert!((x - m).abs() < 1e-5);
        }
    }

    #[test]
    fn empirical_variance_matches() {
        let (kappa, dt) = (0.8, 0.05);
        let samples = 100_000;
        let mut rng = seeded_rng(11, 0);
        let mut buf = Vec::new();
        let mut xs = Vec::with_capacity(samples);
        for _ in 0..samples {
            sample_readout_into(&mut rng, &[0.3], kappa, dt, &mut buf).unwrap();
            xs.push(buf[0]);
        }
        let n = samples as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let target = 1.0 / (4.0 * kappa * dt);
        // Standard error of the sample variance of a Gaussian: σ² √(2/(n-1)).
        let se = target * (2.0 / (n - 1.0)).sqrt();
        assert!((var - target).abs() < 3.0 * se, "{var} vs {target} ± {se}");
    }

    #[test]
    fn reported_density_matches_formula() {
        let (kappa, dt) = (1.1, 0.2);
        let mut rng = seeded_rng(5, 3);
        let mut buf = Vec::new();
        let mean = [0.1, -0.2, 0.4];
        let d = sample_readout_into(&mut rng, &mean, kappa, dt, &mut buf).unwrap();
        let c = readout_measure_factor(kappa, dt).unwrap();
        let expected: f64 = buf
            .iter()
            .zip(mean)
            .map(|(a, m)| c.ln() - 2.0 * kappa * dt * (a - m) * (a - m))
            .sum();
        assert!((d.log_density - expected).abs() < 1e-12);
    }
}
