use std::path::Path;

use nalgebra::DMatrix;

use super::{nu_of_omega, MediumSpec, TwoTimeKernel};
use crate::error::{ensure_non_negative, ensure_positive, invalid, Error, Result};
use crate::numerics::compensated_sum;
use crate::readout::{DiscretePath, FormFactor};
use crate::table::read_table;

/// Pair of particle trajectories `r₁(t_i)`, `r₂(t_i)` sampled at the step
/// midpoints, stored as `N × d` matrices with `d ∈ {1, 2, 3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPair3 {
    r1: DMatrix<f64>,
    r2: DMatrix<f64>,
}

impl PathPair3 {
    pub fn new(r1: DMatrix<f64>, r2: DMatrix<f64>) -> Result<Self> {
        if r1.shape() != r2.shape() {
            return Err(Error::DimensionMismatch(format!(
                "paths have shapes {:?} and {:?}",
                r1.shape(),
                r2.shape()
            )));
        }
        if !(1..=3).contains(&r1.ncols()) {
            return Err(invalid("dimension", format!("must be 1, 2 or 3, got {}", r1.ncols())));
        }
        if r1.iter().chain(r2.iter()).any(|x| !x.is_finite()) {
            return Err(invalid("path", "must be finite"));
        }
        Ok(Self { r1, r2 })
    }

    pub fn from_paths(r1: &DiscretePath, r2: &DiscretePath) -> Result<Self> {
        Self::new(
            DMatrix::from_column_slice(r1.len(), 1, r1.values()),
            DMatrix::from_column_slice(r2.len(), 1, r2.values()),
        )
    }

    /// Rows `t, r₁ (d columns), r₂ (d columns)`; the time column is ignored.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if width < 3 || (width - 1) % 2 != 0 {
            return Err(Error::Table {
                line: 1,
                reason: format!("expected 1 + 2d columns, got {width}"),
            });
        }
        let d = (width - 1) / 2;
        let n = rows.len();
        let r1 = DMatrix::from_fn(n, d, |i, c| rows[i][1 + c]);
        let r2 = DMatrix::from_fn(n, d, |i, c| rows[i][1 + d + c]);
        Self::new(r1, r2)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_rows(&read_table(path)?)
    }

    pub fn r1(&self) -> &DMatrix<f64> {
        &self.r1
    }

    pub fn r2(&self) -> &DMatrix<f64> {
        &self.r2
    }

    pub fn steps(&self) -> usize {
        self.r1.nrows()
    }

    pub fn dim(&self) -> usize {
        self.r1.ncols()
    }

    pub fn swapped(&self) -> Self {
        Self {
            r1: self.r2.clone(),
            r2: self.r1.clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            r1: &self.r1 * factor,
            r2: &self.r2 * factor,
        }
    }

    /// Component `c` of both paths as 1-D paths.
    pub fn component(&self, c: usize) -> (DiscretePath, DiscretePath) {
        (
            DiscretePath::new(self.r1.column(c).iter().copied().collect()),
            DiscretePath::new(self.r2.column(c).iter().copied().collect()),
        )
    }

    /// Largest separation between any two sampled points of either path.
    pub fn max_displacement(&self) -> f64 {
        let n = self.steps();
        let mut best = 0.0f64;
        for a in [&self.r1, &self.r2] {
            for b in [&self.r1, &self.r2] {
                for j in 0..n {
                    for k in 0..n {
                        best = best.max(sq_dist(a, j, b, k));
                    }
                }
            }
        }
        best.sqrt()
    }
}

pub(crate) fn sq_dist(a: &DMatrix<f64>, j: usize, b: &DMatrix<f64>, k: usize) -> f64 {
    (0..a.ncols()).map(|c| (a[(j, c)] - b[(k, c)]).powi(2)).sum()
}

/// `e^{-Δ₁₁²/2l²} + e^{-Δ₂₂²/2l²} - 2 e^{-Δ₂₁²/2l²}` for the sample pair `(j, k)`.
pub(crate) fn bracket(pp: &PathPair3, j: usize, k: usize, range: f64) -> f64 {
    let s = -0.5 / (range * range);
    (s * sq_dist(&pp.r1, j, &pp.r1, k)).exp() + (s * sq_dist(&pp.r2, j, &pp.r2, k)).exp()
        - 2.0 * (s * sq_dist(&pp.r2, j, &pp.r1, k)).exp()
}

/// `2|r₂(j) - r₁(k)|² - |r₁(j) - r₁(k)|² - |r₂(j) - r₂(k)|²`.
pub(crate) fn quadratic_bracket(pp: &PathPair3, j: usize, k: usize) -> f64 {
    2.0 * sq_dist(&pp.r2, j, &pp.r1, k)
        - sq_dist(&pp.r1, j, &pp.r1, k)
        - sq_dist(&pp.r2, j, &pp.r2, k)
}

/// Log of the single-frequency medium influence functional.
pub fn log_influence_single_frequency(
    pp: &PathPair3,
    omega: f64,
    spec: &MediumSpec,
    dt: f64,
) -> Result<f64> {
    let nu = nu_of_omega(spec, omega)?;
    ensure_non_negative("dt", dt)?;
    let n = pp.steps();
    let s = compensated_sum((0..n).flat_map(|j| {
        (0..n).map(move |k| (omega * (j as f64 - k as f64) * dt).cos() * bracket(pp, j, k, spec.range))
    }));
    Ok(-nu * s * dt * dt)
}

pub fn influence_single_frequency(
    pp: &PathPair3,
    omega: f64,
    spec: &MediumSpec,
    dt: f64,
) -> Result<f64> {
    log_influence_single_frequency(pp, omega, spec, dt).map(f64::exp)
}

fn kernel_sum(pp: &PathPair3, kernel: &TwoTimeKernel, term: impl Fn(usize, usize) -> f64) -> f64 {
    let n = pp.steps();
    let b = kernel.band();
    let m = kernel.weights();
    compensated_sum((0..n).flat_map(|j| {
        let term = &term;
        (j.saturating_sub(b)..(j + b + 1).min(n)).map(move |k| m[(j, k)] * term(j, k))
    }))
}

/// Log of the medium influence functional integrated over frequencies,
/// `-(κl²/2) Σ_jk M_jk [bracket]_jk Δt`.
pub fn log_influence_exact(
    pp: &PathPair3,
    kernel: &TwoTimeKernel,
    kappa: f64,
    range: f64,
    dt: f64,
) -> Result<f64> {
    kernel.expect_steps(pp.steps())?;
    ensure_non_negative("kappa", kappa)?;
    ensure_positive("range", range)?;
    let s = kernel_sum(pp, kernel, |j, k| bracket(pp, j, k, range));
    Ok(-0.5 * kappa * range * range * s * dt)
}

pub fn influence_exact(
    pp: &PathPair3,
    kernel: &TwoTimeKernel,
    kappa: f64,
    range: f64,
    dt: f64,
) -> Result<f64> {
    log_influence_exact(pp, kernel, kappa, range, dt).map(f64::exp)
}

/// Log of the influence functional with each Gaussian bracket expanded to
/// first order in `Δr²/l²`, `-(κ/4) Σ_jk M_jk [quadratic bracket]_jk Δt`.
pub fn log_influence_firstorder(
    pp: &PathPair3,
    kernel: &TwoTimeKernel,
    kappa: f64,
    dt: f64,
) -> Result<f64> {
    kernel.expect_steps(pp.steps())?;
    ensure_non_negative("kappa", kappa)?;
    let s = kernel_sum(pp, kernel, |j, k| quadratic_bracket(pp, j, k));
    Ok(-0.25 * kappa * s * dt)
}

pub fn influence_firstorder(pp: &PathPair3, kernel: &TwoTimeKernel, kappa: f64, dt: f64) -> Result<f64> {
    log_influence_firstorder(pp, kernel, kappa, dt).map(f64::exp)
}

/// Both sides of `Σ_i Σ_jk P_ij P_ik [quadratic bracket]_jk Δt = 2 Σ_i |⟨r₂⟩_i - ⟨r₁⟩_i|² Δt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R2Check {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
}

pub fn verify_r2_identity(pp: &PathPair3, factor: &FormFactor, dt: f64) -> Result<R2Check> {
    if factor.steps() != pp.steps() {
        return Err(Error::DimensionMismatch(format!(
            "form-factor has {} samples, paths have {}",
            factor.steps(),
            pp.steps()
        )));
    }
    let n = pp.steps();
    let mut lhs_rows = Vec::with_capacity(n);
    let mut rhs_rows = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<(usize, f64)> = factor.row(i).collect();
        lhs_rows.push(compensated_sum(row.iter().flat_map(|&(j, wj)| {
            row.iter().map(move |&(k, wk)| wj * wk * quadratic_bracket(pp, j, k))
        })));
        let sep: f64 = (0..pp.dim())
            .map(|c| {
                let m1 = compensated_sum(row.iter().map(|&(j, w)| w * pp.r1[(j, c)]));
                let m2 = compensated_sum(row.iter().map(|&(j, w)| w * pp.r2[(j, c)]));
                (m2 - m1).powi(2)
            })
            .sum();
        rhs_rows.push(2.0 * sep);
    }
    let lhs = compensated_sum(lhs_rows) * dt;
    let rhs = compensated_sum(rhs_rows) * dt;
    Ok(R2Check {
        lhs,
        rhs,
        abs_diff: (lhs - rhs).abs(),
    })
}
