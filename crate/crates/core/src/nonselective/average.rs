use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::decay_factor;
use crate::error::{invalid, Result};
use crate::lattice::{DensityMatrixGrid, MonitoredSystem, QuantumState, UnitaryPropagator};
use crate::quadrature::gauss_hermite;
use crate::readout::{readout_measure_factor, sample_readout_into, FormFactor, ReadoutTrajectory};
use crate::selective::{run_chunks, CoarseEngine, EffectivePropagator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AverageMode {
    /// Closed-form Gaussian integral over each readout sample.
    ClosedForm,
    /// Gauss–Hermite quadrature over each readout sample.
    GaussHermite { nodes: usize },
    /// Importance sampling over whole readouts.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct AverageResult {
    pub rho: DensityMatrixGrid,
    /// Per-entry standard error for the Monte Carlo mode.
    pub standard_error: Option<DMatrix<f64>>,
}

/// `ρ_T = ∫ d[a] U[a] ρ₀ U[a]†` for a pure initial state.
///
/// Quadrature modes apply to ideal resolution only. With a non-delta
/// form-factor the readout integral does not factor over time and the
/// Monte Carlo mode is required.
pub fn readout_average(
    psi0: &QuantumState,
    sys: &MonitoredSystem,
    form_factor: Option<&FormFactor>,
    mode: AverageMode,
) -> Result<AverageResult> {
    crate::selective::check_state(psi0, sys)?;
    let rho0 = DensityMatrixGrid::from_pure(psi0);
    let coarse = form_factor.filter(|f| !f.is_delta());
    if sys.kappa == 0.0 {
        return Ok(AverageResult {
            rho: quadrature_average(&rho0, sys, &DMatrix::from_element(sys.points(), sys.points(), 1.0))?,
            standard_error: matches!(mode, AverageMode::MonteCarlo { .. })
                .then(|| DMatrix::zeros(sys.points(), sys.points())),
        });
    }
    match (mode, coarse) {
        (AverageMode::ClosedForm, None) => Ok(AverageResult {
            rho: quadrature_average(&rho0, sys, &decay_factor(sys, sys.dt()))?,
            standard_error: None,
        }),
        (AverageMode::GaussHermite { nodes }, None) => Ok(AverageResult {
            rho: quadrature_average(&rho0, sys, &gauss_hermite_factor(sys, nodes)?)?,
            standard_error: None,
        }),
        (AverageMode::MonteCarlo { samples, seed }, coarse) => {
            monte_carlo_average(psi0, sys, coarse, samples, seed)
        }
        (_, Some(_)) => Err(invalid(
            "mode",
            "quadrature averaging needs ideal resolution; use the Monte Carlo mode",
        )),
    }
}

fn quadrature_average(
    rho0: &DensityMatrixGrid,
    sys: &MonitoredSystem,
    factor: &DMatrix<f64>,
) -> Result<DensityMatrixGrid> {
    let half = UnitaryPropagator::new(&sys.grid, &sys.hamiltonian, 0.5 * sys.dt())?;
    let mut rho = rho0.entries().clone();
    for _ in 0..sys.time.steps() {
        half.sandwich(&mut rho);
        rho.zip_apply(factor, |r, g| *r *= g);
        half.sandwich(&mut rho);
    }
    DensityMatrixGrid::new(rho, rho0.spacing())
}

/// `∫ c e^{-κΔt[(A_k - a)² + (A_l - a)²]} da` by Gauss–Hermite nodes centred
/// at the mean observable value.
fn gauss_hermite_factor(sys: &MonitoredSystem, nodes: usize) -> Result<DMatrix<f64>> {
    let (x, w) = gauss_hermite(nodes)?;
    let a = sys.observable.values();
    let n = a.len();
    let centre = a.iter().sum::<f64>() / n as f64;
    let k = sys.kappa * sys.dt();
    let s = (2.0 * k).sqrt();
    let norm = std::f64::consts::PI.sqrt().recip();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let sum: f64 = x
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| {
                let ai = centre + xi / s;
                wi * (xi * xi - k * ((a[i] - ai).powi(2) + (a[j] - ai).powi(2))).exp()
            })
            .sum();
        norm * sum
    }))
}

/// `⟨A⟩` at the step midpoints along the unitary evolution, used as the
/// proposal mean.
pub(crate) fn unitary_mean_path(psi0: &QuantumState, sys: &MonitoredSystem) -> Result<Vec<f64>> {
    let half = UnitaryPropagator::new(&sys.grid, &sys.hamiltonian, 0.5 * sys.dt())?;
    let mut psi = psi0.clone().normalized();
    let mut out = Vec::with_capacity(sys.time.steps());
    for _ in 0..sys.time.steps() {
        half.apply(psi.amplitudes_mut());
        out.push(psi.expectation(&sys.observable));
        half.apply(psi.amplitudes_mut());
    }
    Ok(out)
}

fn outer(psi: &[C64]) -> impl Iterator<Item = C64> + '_ {
    // Column-major order of ψψ†.
    psi.iter().flat_map(move |b| psi.iter().map(move |a| a * b.conj()))
}

fn monte_carlo_average(
    psi0: &QuantumState,
    sys: &MonitoredSystem,
    coarse: Option<&FormFactor>,
    samples: usize,
    seed: u64,
) -> Result<AverageResult> {
    if samples == 0 {
        return Err(invalid("samples", "must be >= 1"));
    }
    let n = sys.points();
    let steps = sys.time.steps();
    let mean = unitary_mean_path(psi0, sys)?;
    let log_c = readout_measure_factor(sys.kappa, sys.dt())?.ln() * steps as f64;
    let ideal = EffectivePropagator::new(sys)?;
    let engine = coarse.map(|f| CoarseEngine::new(f, sys)).transpose()?;
    let failure = std::sync::Mutex::new(None);

    let moments = run_chunks(samples, seed, n * n, |rng, m| {
        let mut values = Vec::with_capacity(steps);
        let density = match sample_readout_into(rng, &mean, sys.kappa, sys.dt(), &mut values) {
            Ok(d) => d,
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                return;
            }
        };
        let weight = (log_c - density.log_density).exp();
        let mut psi_i = psi0.amplitudes().to_vec();
        ideal.evolve(&mut psi_i, &values);
        let x: Vec<C64> = match &engine {
            None => outer(&psi_i).map(|z| z * weight).collect(),
            Some(engine) => {
                let readout = ReadoutTrajectory::new(values).expect("finite readout");
                match engine.propagate(psi0.amplitudes(), &readout) {
                    Ok(psi_c) => outer(&psi_c)
                        .zip(outer(&psi_i))
                        .map(|(c, i)| (c - i) * weight)
                        .collect(),
                    Err(e) => {
                        failure.lock().unwrap().get_or_insert(e);
                        return;
                    }
                }
            }
        };
        m.push(&x);
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }

    let mut rho = DMatrix::from_vec(n, n, moments.mean());
    if engine.is_some() {
        let base = quadrature_average(&DensityMatrixGrid::from_pure(psi0), sys, &decay_factor(sys, sys.dt()))?;
        rho += base.entries();
    }
    let se = DMatrix::from_vec(n, n, moments.standard_error());
    Ok(AverageResult {
        rho: DensityMatrixGrid::new(rho, psi0.spacing())?,
        standard_error: Some(se),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{HamiltonianSpec, SpatialGrid, TimeGrid};
    use crate::nonselective::lindblad_evolve;

    fn system(n: usize, steps: usize, kappa: f64) -> MonitoredSystem {
        let grid = SpatialGrid::new(8.0, n).unwrap();
        let h = HamiltonianSpec::free(&grid, 1.0);
        MonitoredSystem::monitoring_position(grid, TimeGrid::new(1.0, steps).unwrap(), h, kappa)
            .unwrap()
    }

    #[test]
    fn single_step_zero_hamiltonian_gaussian_integral() {
        let grid = SpatialGrid::new(8.0, 8).unwrap();
        let h = HamiltonianSpec::zero(&grid);
        let sys = MonitoredSystem::monitoring_position(grid, TimeGrid::new(0.3, 1).unwrap(), h, 0.9)
            .unwrap();
        let psi = QuantumState::gaussian(&sys.grid, 0.0, 1.0, 0.5, 1.0);
        let rho = readout_average(&psi, &sys, None, AverageMode::ClosedForm).unwrap().rho;
        let rho0 = DensityMatrixGrid::from_pure(&psi);
        let q = sys.grid.coordinates();
        for k in 0..8 {
            for l in 0..8 {
                let want = rho0.entries()[(k, l)] * (-0.5 * 0.9 * 0.3 * (q[k] - q[l]).powi(2)).exp();
                assert!((rho.entries()[(k, l)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn gauss_hermite_matches_closed_form() {
        let sys = system(8, 6, 1.0);
        let psi = QuantumState::gaussian(&sys.grid, 0.5, 1.0, 0.3, 1.0);
        let a = readout_average(&psi, &sys, None, AverageMode::ClosedForm).unwrap().rho;
        let b = readout_average(&psi, &sys, None, AverageMode::GaussHermite { nodes: 120 }).unwrap().rho;
        assert!(a.max_abs_diff(&b) < 1e-10, "{}", a.max_abs_diff(&b));
        assert!((a.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_order_agreement_with_lindblad() {
        let mut errs = Vec::new();
        for steps in [16, 32, 64] {
            let sys = system(16, steps, 1.0);
            let psi = QuantumState::gaussian(&sys.grid, 0.0, 1.0, 1.0, 1.0);
            let a = readout_average(&psi, &sys, None, AverageMode::ClosedForm).unwrap().rho;
            let b = lindblad_evolve(&DensityMatrixGrid::from_pure(&psi), &sys).unwrap();
            errs.push(a.max_abs_diff(&b));
        }
        for o in crate::numerics::halving_orders(&errs) {
            assert!(o > 1.8, "{errs:?}");
        }
    }

    #[test]
    fn monte_carlo_within_error_bars() {
        let sys = system(8, 4, 1.0);
        let psi = QuantumState::gaussian(&sys.grid, 0.0, 1.0, 0.0, 1.0);
        let exact = readout_average(&psi, &sys, None, AverageMode::ClosedForm).unwrap().rho;
        let mc = readout_average(&psi, &sys, None, AverageMode::MonteCarlo { samples: 20_000, seed: 4 })
            .unwrap();
        let se = mc.standard_error.unwrap();
        for k in 0..8 {
            for l in 0..8 {
                let d = (mc.rho.entries()[(k, l)] - exact.entries()[(k, l)]).norm();
                assert!(d <= 5.0 * se[(k, l)] + 1e-12, "{k} {l}: {d} vs {}", se[(k, l)]);
            }
        }
    }

    #[test]
    fn quadrature_rejects_coarse() {
        let sys = system(8, 8, 1.0);
        let psi = QuantumState::gaussian(&sys.grid, 0.0, 1.0, 0.0, 1.0);
        let ff = FormFactor::gaussian(&sys.time, 0.2).unwrap();
        assert!(readout_average(&psi, &sys, Some(&ff), AverageMode::ClosedForm).is_err());
    }
}
