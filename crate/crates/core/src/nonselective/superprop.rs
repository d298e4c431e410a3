use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{check_density, log_influence, InfluenceKernel};
use crate::error::{invalid, Result};
use crate::lattice::{DensityMatrixGrid, MonitoredSystem};
use crate::readout::{DiscretePath, FormFactor};
use crate::selective::{run_chunks, PathKernels, PathSampler, StartSampler};
use crate::transfer::{BandTerms, Contraction, SliceWeight, WindowSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuperMode {
    /// Windowed contraction of the doubled path sum.
    Exact,
    /// Sampling of path pairs.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct SuperResult {
    pub rho: DensityMatrixGrid,
    /// Per-entry standard error for the Monte Carlo mode.
    pub standard_error: Option<DMatrix<f64>>,
    /// Standard error of the trace for the Monte Carlo mode.
    pub trace_error: Option<f64>,
    pub window: WindowSpec,
}

/// Weight of a doubled path whose digit `d = m·n + m'` encodes the ket
/// index `m` and bra index `m'`.
enum DoubledWeight<'a> {
    Band {
        terms: BandTerms,
        diff: Vec<f64>,
        scale: f64,
    },
    Medium {
        weights: &'a DMatrix<f64>,
        band: usize,
        ket: Vec<f64>,
        bra: Vec<f64>,
        /// Interaction range for the exact bracket, `None` for first order.
        range: Option<f64>,
        prefactor: f64,
    },
}

impl SliceWeight for DoubledWeight<'_> {
    fn log_weight(&self, s: usize, window: &[usize]) -> f64 {
        match self {
            Self::Band { terms, diff, scale } => terms
                .completed(s, window, |d| diff[d])
                .map(|(_, m)| -scale * m * m)
                .sum(),
            Self::Medium {
                weights,
                band,
                ket,
                bra,
                range,
                prefactor,
            } => {
                let top = window.len() - 1;
                let bracket = |dj: usize, dk: usize| -> f64 {
                    let (r1j, r2j, r1k, r2k) = (ket[dj], bra[dj], ket[dk], bra[dk]);
                    match range {
                        Some(l) => {
                            let c = -0.5 / (l * l);
                            (c * (r1j - r1k).powi(2)).exp() + (c * (r2j - r2k).powi(2)).exp()
                                - 2.0 * (c * (r2j - r1k).powi(2)).exp()
                        }
                        None => {
                            2.0 * (r2j - r1k).powi(2) - (r1j - r1k).powi(2) - (r2j - r2k).powi(2)
                        }
                    }
                };
                let dj = window[top];
                let mut sum = weights[(s, s)] * bracket(dj, dj);
                for lag in 1..=(*band).min(s) {
                    let k = s - lag;
                    let dk = window[top - lag];
                    sum += weights[(s, k)] * bracket(dj, dk) + weights[(k, s)] * bracket(dk, dj);
                }
                -prefactor * sum
            }
        }
    }
}

fn doubled_transition(full: &DMatrix<C64>) -> Vec<C64> {
    let n = full.nrows();
    let b = n * n;
    let mut t = vec![C64::new(0.0, 0.0); b * b];
    for p in 0..n {
        for q in 0..n {
            for m in 0..n {
                for mq in 0..n {
                    t[(p * n + q) * b + m * n + mq] = full[(p, m)] * full[(q, mq)].conj();
                }
            }
        }
    }
    t
}

fn normalized_kernel(kernel: &InfluenceKernel, sys: &MonitoredSystem) -> InfluenceKernel {
    match kernel {
        InfluenceKernel::Ideal { kappa } => InfluenceKernel::Coarse {
            kappa: *kappa,
            form_factor: FormFactor::delta(&sys.time),
        },
        other => other.clone(),
    }
}

fn doubled_weight<'a>(kernel: &'a InfluenceKernel, sys: &MonitoredSystem) -> DoubledWeight<'a> {
    let a = sys.observable.values();
    let n = a.len();
    let ket: Vec<f64> = (0..n * n).map(|d| a[d / n]).collect();
    let bra: Vec<f64> = (0..n * n).map(|d| a[d % n]).collect();
    let dt = sys.dt();
    match kernel {
        InfluenceKernel::Ideal { .. } => unreachable!("normalized to the delta form-factor"),
        InfluenceKernel::Coarse { kappa, form_factor } => DoubledWeight::Band {
            terms: BandTerms::new(form_factor),
            diff: ket.iter().zip(&bra).map(|(x, y)| x - y).collect(),
            scale: 0.5 * kappa * dt,
        },
        InfluenceKernel::MediumExact {
            kappa,
            range,
            kernel,
        } => DoubledWeight::Medium {
            weights: kernel.weights(),
            band: kernel.band(),
            ket,
            bra,
            range: Some(*range),
            prefactor: 0.5 * kappa * range * range * dt,
        },
        InfluenceKernel::MediumFirstOrder { kappa, kernel } => DoubledWeight::Medium {
            weights: kernel.weights(),
            band: kernel.band(),
            ket,
            bra,
            range: None,
            prefactor: 0.25 * kappa * dt,
        },
    }
}

/// Exact doubled path sum on raw amplitude matrices (no Hermiticity assumed).
pub(crate) fn superpropagate_raw(
    rho0: &DMatrix<C64>,
    kernel: &InfluenceKernel,
    sys: &MonitoredSystem,
) -> Result<(DMatrix<C64>, WindowSpec)> {
    kernel.validate(sys.time.steps())?;
    let kernel = normalized_kernel(kernel, sys);
    let n = sys.points();
    let spec = WindowSpec::doubled(kernel.window(), n);
    spec.check()?;
    let kernels = PathKernels::new(sys)?;
    let sigma0 = &kernels.half * rho0 * kernels.half.adjoint();
    let initial: Vec<C64> = (0..n * n).map(|d| sigma0[(d / n, d % n)]).collect();
    let transition = doubled_transition(&kernels.full);
    let weight = doubled_weight(&kernel, sys);
    let last = Contraction {
        spec,
        transition: &transition,
        weight: &weight,
        slices: sys.time.steps(),
    }
    .run(&initial)?;
    let x = DMatrix::from_fn(n, n, |m, mq| last[m * n + mq]);
    Ok((&kernels.half * x * kernels.half.adjoint(), spec))
}

/// Monte Carlo doubled path sum. Returns the mean, per-entry standard
/// errors and the standard error of the trace.
pub(crate) fn superpropagate_mc_raw(
    rho0: &DMatrix<C64>,
    kernel: &InfluenceKernel,
    sys: &MonitoredSystem,
    samples: usize,
    seed: u64,
) -> Result<(DMatrix<C64>, DMatrix<f64>, f64)> {
    if samples == 0 {
        return Err(invalid("samples", "must be >= 1"));
    }
    kernel.validate(sys.time.steps())?;
    let n = sys.points();
    let steps = sys.time.steps();
    let dt = sys.dt();
    // Ideal and coarse kinds sample only the deviation from the exact
    // ideal result.
    let baseline = match kernel {
        InfluenceKernel::Ideal { kappa } | InfluenceKernel::Coarse { kappa, .. } => {
            Some(InfluenceKernel::Ideal { kappa: *kappa })
        }
        _ => None,
    };
    let kernels = PathKernels::new(sys)?;
    let sigma0 = &kernels.half * rho0 * kernels.half.adjoint();
    let start_weights: Vec<f64> = (0..n * n).map(|d| sigma0[(d / n, d % n)].norm()).collect();
    let start = StartSampler::new(&start_weights)?;
    let sampler = PathSampler::new(&kernels.full)?;
    let a = sys.observable.values();
    let half = &kernels.half;
    let failure = std::sync::Mutex::new(None);

    let moments = run_chunks(samples, seed, n * n + 1, |rng, acc| {
        let (d0, p0) = start.sample(rng);
        let (mut m, mut mq) = (d0 / n, d0 % n);
        let mut amp = sigma0[(m, mq)] / p0;
        let mut ket = Vec::with_capacity(steps);
        let mut bra = Vec::with_capacity(steps);
        ket.push(a[m]);
        bra.push(a[mq]);
        for _ in 1..steps {
            let (to, p) = sampler.step(rng, m);
            let (toq, pq) = sampler.step(rng, mq);
            amp *= kernels.full[(to, m)] / p * (kernels.full[(toq, mq)].conj() / pq);
            m = to;
            mq = toq;
            ket.push(a[m]);
            bra.push(a[mq]);
        }
        let (ket, bra) = (DiscretePath::new(ket), DiscretePath::new(bra));
        let w = match log_influence(&ket, &bra, kernel, dt) {
            Ok(l) => l.exp(),
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                return;
            }
        };
        let w = match &baseline {
            Some(b) => w - log_influence(&ket, &bra, b, dt).map(f64::exp).unwrap_or(w),
            None => w,
        };
        let c = amp * w;
        let mut x = Vec::with_capacity(n * n + 1);
        for col in 0..n {
            let right = half[(col, mq)].conj();
            for row in 0..n {
                x.push(c * half[(row, m)] * right);
            }
        }
        let trace: C64 = (0..n).map(|r| half[(r, m)] * half[(r, mq)].conj()).sum();
        x.push(c * trace);
        acc.push(&x);
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mean = moments.mean();
    let se = moments.standard_error();
    let mut rho = DMatrix::from_column_slice(n, n, &mean[..n * n]);
    if let Some(b) = &baseline {
        rho += superpropagate_raw(rho0, b, sys)?.0;
    }
    Ok((rho, DMatrix::from_column_slice(n, n, &se[..n * n]), se[n * n]))
}

/// `ρ_T = Σ_{q, q'} K[q] K*[q'] W[q | q'] ρ₀` over doubled lattice paths.
///
/// The measurement strength is taken from `kernel`; `sys.kappa` is not used.
pub fn superpropagate(
    rho0: &DensityMatrixGrid,
    kernel: &InfluenceKernel,
    sys: &MonitoredSystem,
    mode: SuperMode,
) -> Result<SuperResult> {
    check_density(rho0, sys)?;
    let window = WindowSpec::doubled(normalized_kernel(kernel, sys).window(), sys.points());
    match mode {
        SuperMode::Exact => {
            let (rho, window) = superpropagate_raw(rho0.entries(), kernel, sys)?;
            Ok(SuperResult {
                rho: DensityMatrixGrid::new(rho, rho0.spacing())?,
                standard_error: None,
                trace_error: None,
                window,
            })
        }
        SuperMode::MonteCarlo { samples, seed } => {
            let (rho, se, trace_se) = superpropagate_mc_raw(rho0.entries(), kernel, sys, samples, seed)?;
            Ok(SuperResult {
                rho: DensityMatrixGrid::new(rho, rho0.spacing())?,
                standard_error: Some(se),
                trace_error: Some(trace_se * rho0.spacing()),
                window,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{HamiltonianSpec, QuantumState, SpatialGrid, TimeGrid};
    use crate::nonselective::{readout_average, AverageMode};

    fn system(n: usize, steps: usize) -> MonitoredSystem {
        let grid = SpatialGrid::new(8.0, n).unwrap();
        let h = HamiltonianSpec::free(&grid, 1.0);
        MonitoredSystem::monitoring_position(grid, TimeGrid::new(1.0, steps).unwrap(), h, 0.8)
            .unwrap()
    }

    #[test]
    fn ideal_matches_readout_average() {
        let sys = system(8, 6);
        let psi = QuantumState::gaussian(&sys.grid, 0.3, 1.0, 0.5, 1.0);
        let want = readout_average(&psi, &sys, None, AverageMode::ClosedForm).unwrap().rho;
        let got = superpropagate(
            &DensityMatrixGrid::from_pure(&psi),
            &InfluenceKernel::Ideal { kappa: 0.8 },
            &sys,
            SuperMode::Exact,
        )
        .unwrap()
        .rho;
        assert!(got.max_abs_diff(&want) < 1e-12, "{}", got.max_abs_diff(&want));
    }

    #[test]
    fn delta_coarse_bit_identical_to_ideal() {
        let sys = system(4, 5);
        let rho0 = DensityMatrixGrid::from_pure(&QuantumState::gaussian(&sys.grid, 0.0, 1.0, 0.2, 1.0));
        let a = superpropagate(&rho0, &InfluenceKernel::Ideal { kappa: 0.8 }, &sys, SuperMode::Exact)
            .unwrap();
        let b = superpropagate(
            &rho0,
            &InfluenceKernel::Coarse {
                kappa: 0.8,
                form_factor: FormFactor::delta(&sys.time),
            },
            &sys,
            SuperMode::Exact,
        )
        .unwrap();
        assert_eq!(a.rho, b.rho);
    }

    #[test]
    fn monte_carlo_matches_exact_coarse() {
        let sys = system(4, 5);
        let rho0 = DensityMatrixGrid::from_pure(&QuantumState::gaussian(&sys.grid, 0.0, 1.0, 0.2, 1.0));
        let kernel = InfluenceKernel::Coarse {
            kappa: 0.8,
            form_factor: FormFactor::gaussian(&sys.time, 0.08).unwrap(),
        };
        let exact = superpropagate(&rho0, &kernel, &sys, SuperMode::Exact).unwrap().rho;
        let mc = superpropagate(&rho0, &kernel, &sys, SuperMode::MonteCarlo { samples: 50_000, seed: 1 })
            .unwrap();
        let se = mc.standard_error.unwrap();
        for k in 0..4 {
            for l in 0..4 {
                let d = (mc.rho.entries()[(k, l)] - exact.entries()[(k, l)]).norm();
                assert!(d <= 5.0 * se[(k, l)] + 1e-12, "{d} vs {}", se[(k, l)]);
            }
        }
    }
}
