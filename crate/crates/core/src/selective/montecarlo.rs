use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;
use rayon::prelude::*;

use super::{check_state, evolve_selective_ideal, PathKernels, SelectiveResult};
use crate::error::{invalid, Error, Result};
use crate::lattice::{MonitoredSystem, QuantumState};
use crate::readout::{seeded_rng, FormFactor, ReadoutTrajectory};

/// Samples per RNG stream. Chunk `c` always uses stream `c`, so results do
/// not depend on the thread count.
pub(crate) const CHUNK: usize = 2048;

/// Importance sampler for lattice paths: `m_0 ∝ |σ_0|`, then
/// `m_{i+1} ∝ |K(m_{i+1}, m_i)|`.
pub(crate) struct PathSampler {
    columns: Vec<(WeightedIndex<f64>, f64)>,
    magnitudes: DMatrix<f64>,
}

impl PathSampler {
    pub fn new(kernel: &DMatrix<C64>) -> Result<Self> {
        let n = kernel.nrows();
        let magnitudes = kernel.map(|z| z.norm());
        let columns = (0..n)
            .map(|k| {
                let col: Vec<f64> = magnitudes.column(k).iter().copied().collect();
                let total: f64 = col.iter().sum();
                WeightedIndex::new(&col)
                    .map(|d| (d, total))
                    .map_err(|e| Error::NotNormalizable(format!("kernel column {k}: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            columns,
            magnitudes,
        })
    }

    /// Draws the next index and returns it with its probability.
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R, from: usize) -> (usize, f64) {
        let (dist, total) = &self.columns[from];
        let to = dist.sample(rng);
        (to, self.magnitudes[(to, from)] / total)
    }
}

/// Categorical draw proportional to `|v_k|`.
pub(crate) struct StartSampler {
    dist: WeightedIndex<f64>,
    probs: Vec<f64>,
}

impl StartSampler {
    pub fn new(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        let dist = WeightedIndex::new(weights)
            .map_err(|e| Error::NotNormalizable(format!("initial amplitude: {e}")))?;
        Ok(Self {
            dist,
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let k = self.dist.sample(rng);
        (k, self.probs[k])
    }
}

/// Running first and second moments of a complex vector estimator.
#[derive(Clone)]
pub(crate) struct Moments {
    pub sum: Vec<C64>,
    pub sum_sq: Vec<f64>,
    pub count: usize,
}

impl Moments {
    pub fn new(len: usize) -> Self {
        Self {
            sum: vec![C64::new(0.0, 0.0); len],
            sum_sq: vec![0.0; len],
            count: 0,
        }
    }

    pub fn push(&mut self, x: &[C64]) {
        for ((s, q), v) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(x) {
            *s += v;
            *q += v.norm_sqr();
        }
        self.count += 1;
    }

    pub fn merge(mut self, other: &Self) -> Self {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.count += other.count;
        self
    }

    pub fn mean(&self) -> Vec<C64> {
        let n = self.count as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Standard error of each mean entry.
    pub fn standard_error(&self) -> Vec<f64> {
        let n = self.count as f64;
        if self.count < 2 {
            return vec![f64::INFINITY; self.sum.len()];
        }
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(s, q)| {
                let var = ((q / n - (s / n).norm_sqr()) * n / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            })
            .collect()
    }
}

/// Pairwise reduction in chunk order.
pub(crate) fn reduce_pairwise(mut parts: Vec<Moments>) -> Moments {
    while parts.len() > 1 {
        parts = parts
            .chunks(2)
            .map(|p| match p {
                [a, b] => a.clone().merge(b),
                [a] => a.clone(),
                _ => unreachable!(),
            })
            .collect();
    }
    parts.pop().expect("at least one chunk")
}

/// Runs `body(rng, moments)` over `samples` draws split into fixed chunks.
pub(crate) fn run_chunks<F>(samples: usize, seed: u64, len: usize, body: F) -> Moments
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut Moments) + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seeded_rng(seed, c as u64);
            let mut m = Moments::new(len);
            let todo = CHUNK.min(samples - c * CHUNK);
            for _ in 0..todo {
                body(&mut rng, &mut m);
            }
            m
        })
        .collect();
    reduce_pairwise(parts)
}

/// Monte Carlo estimate of the coarse conditioned state.
#[derive(Debug, Clone)]
pub struct SelectiveEstimate {
    pub result: SelectiveResult,
    /// Standard error of each amplitude.
    pub standard_error: Vec<f64>,
    /// Linearized standard error of `P[a]`.
    pub probability_standard_error: f64,
    pub samples: usize,
}

/// Path-sampling estimate of [`evolve_selective_coarse`](super::evolve_selective_coarse)
/// for windows too wide for the exact contraction.
///
/// The ideal state is computed exactly and only the weight difference
/// `w̃ - w` is sampled, so the estimator is exact for a delta form-factor
/// and at κ = 0.
pub fn evolve_selective_coarse_mc(
    psi0: &QuantumState,
    readout: &ReadoutTrajectory,
    form_factor: &FormFactor,
    sys: &MonitoredSystem,
    samples: usize,
    seed: u64,
) -> Result<SelectiveEstimate> {
    check_state(psi0, sys)?;
    if samples < 2 {
        return Err(invalid("samples", "need at least 2"));
    }
    if form_factor.steps() != sys.time.steps() {
        return Err(Error::DimensionMismatch(format!(
            "form-factor has {} samples, time grid has {} steps",
            form_factor.steps(),
            sys.time.steps()
        )));
    }
    let ideal = evolve_selective_ideal(psi0, readout, sys)?;
    let n = sys.points();
    let steps = sys.time.steps();
    let kernels = PathKernels::new(sys)?;
    let sigma0 = &kernels.half * DVector::from_column_slice(psi0.amplitudes());
    let start = StartSampler::new(&sigma0.iter().map(|z| z.norm()).collect::<Vec<_>>())?;
    let sampler = PathSampler::new(&kernels.full)?;
    let observable = sys.observable.values();
    let a = readout.values();
    let scale = sys.kappa * sys.dt();
    let reference: Vec<C64> = ideal.state.amplitudes().to_vec();
    let dq = psi0.spacing();

    // Slot n carries the linearized probability increment.
    let moments = run_chunks(samples, seed, n + 1, |rng, m| {
        let mut path = Vec::with_capacity(steps);
        let (mut k, p) = start.sample(rng);
        let mut amp = sigma0[k] / p;
        path.push(observable[k]);
        for _ in 1..steps {
            let (to, p) = sampler.step(rng, k);
            amp *= kernels.full[(to, k)] / p;
            k = to;
            path.push(observable[k]);
        }
        let coarse = form_factor.coarse_grain_values(&path);
        let log_coarse: f64 = coarse.iter().zip(a).map(|(x, y)| -scale * (x - y).powi(2)).sum();
        let log_ideal: f64 = path.iter().zip(a).map(|(x, y)| -scale * (x - y).powi(2)).sum();
        let diff = log_coarse.exp() - log_ideal.exp();
        let mut x: Vec<C64> = kernels.half.column(k).iter().map(|h| h * amp * diff).collect();
        let lin: f64 = x.iter().zip(&reference).map(|(v, r)| 2.0 * (r.conj() * v).re).sum();
        x.push(C64::new(lin * dq, 0.0));
        m.push(&x);
    });

    let mean = moments.mean();
    let se = moments.standard_error();
    let amps: Vec<C64> = reference.iter().zip(&mean).map(|(r, d)| r + d).collect();
    let result = SelectiveResult::new(QuantumState::new(amps, dq)?, sys);
    let probability_standard_error = se[n] * result.log_measure.exp();
    Ok(SelectiveEstimate {
        result,
        standard_error: se[..n].to_vec(),
        probability_standard_error,
        samples,
    })
}
