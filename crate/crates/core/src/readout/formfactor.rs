use std::path::Path;

use nalgebra::DMatrix;

use super::DiscretePath;
use crate::error::{ensure_positive, Error, Result};
use crate::lattice::TimeGrid;
use crate::table::{parse_table, read_table};

/// Gaussian kernels are truncated at this many widths.
pub const GAUSSIAN_SUPPORT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FormFactorKind {
    Delta,
    Gaussian { tau: f64 },
    Tabulated,
}

impl FormFactorKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Delta => "delta",
            Self::Gaussian { .. } => "gaussian",
            Self::Tabulated => "tabulated",
        }
    }
}

/// Discretized coarse-graining kernel `Π_ij ≈ Π_{t_i}(t_j) Δt` over the
/// step midpoints, so that `Ā_i = Σ_j Π_ij A_j`.
///
/// Every row is truncated to `[0, T]` and renormalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFactor {
    kind: FormFactorKind,
    /// Row `i` covers columns `starts[i] .. starts[i] + rows[i].len()`.
    starts: Vec<usize>,
    rows: Vec<Vec<f64>>,
    lower: usize,
    upper: usize,
}

impl FormFactor {
    pub fn delta(time: &TimeGrid) -> Self {
        let n = time.steps();
        Self {
            kind: FormFactorKind::Delta,
            starts: (0..n).collect(),
            rows: vec![vec![1.0]; n],
            lower: 0,
            upper: 0,
        }
    }

    /// Gaussian of width `tau`, truncated at `GAUSSIAN_SUPPORT · tau`.
    /// `tau = 0` gives the delta kernel.
    pub fn gaussian(time: &TimeGrid, tau: f64) -> Result<Self> {
        if tau == 0.0 {
            return Ok(Self::delta(time));
        }
        ensure_positive("tau", tau)?;
        let n = time.steps();
        let dt = time.dt();
        let reach = GAUSSIAN_SUPPORT * tau * (1.0 + 1e-12);
        let dense = DMatrix::from_fn(n, n, |i, j| {
            let lag = (j as f64 - i as f64) * dt;
            if lag.abs() <= reach {
                (-lag * lag / (2.0 * tau * tau)).exp()
            } else {
                0.0
            }
        });
        Self::from_dense(FormFactorKind::Gaussian { tau }, &dense)
    }

    /// Kernel from a stationary lag table: `Π_{t_i}(t_j) ∝ Π(t_j - t_i)`.
    pub fn tabulated(time: &TimeGrid, table: &LagTable) -> Result<Self> {
        let n = time.steps();
        let dt = time.dt();
        let dense = DMatrix::from_fn(n, n, |i, j| table.eval((j as f64 - i as f64) * dt));
        Self::from_dense(FormFactorKind::Tabulated, &dense)
    }

    pub fn load_table(time: &TimeGrid, path: impl AsRef<Path>) -> Result<Self> {
        Self::tabulated(time, &LagTable::from_rows(&read_table(path)?)?)
    }

    /// Arbitrary kernel, rows renormalized. Used for two-time kernels that
    /// are not stationary.
    pub fn from_weights(weights: &DMatrix<f64>) -> Result<Self> {
        Self::from_dense(FormFactorKind::Tabulated, weights)
    }

    fn from_dense(kind: FormFactorKind, dense: &DMatrix<f64>) -> Result<Self> {
        if !dense.is_square() {
            return Err(Error::DimensionMismatch("form-factor must be square".into()));
        }
        let n = dense.nrows();
        let mut starts = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        let (mut lower, mut upper) = (0, 0);
        for i in 0..n {
            let row = dense.row(i);
            let first = (0..n).find(|&j| row[j] != 0.0);
            let last = (0..n).rev().find(|&j| row[j] != 0.0);
            let (Some(first), Some(last)) = (first, last) else {
                return Err(Error::NotNormalizable(format!("form-factor row {i} is empty")));
            };
            let sum: f64 = (first..=last).map(|j| row[j]).sum();
            if !sum.is_finite() || sum.abs() < 1e-300 {
                return Err(Error::NotNormalizable(format!(
                    "form-factor row {i} sums to {sum}"
                )));
            }
            lower = lower.max(i.saturating_sub(first));
            upper = upper.max(last.saturating_sub(i));
            starts.push(first);
            rows.push((first..=last).map(|j| row[j] / sum).collect());
        }
        Ok(Self {
            kind,
            starts,
            rows,
            lower,
            upper,
        })
    }

    pub fn kind(&self) -> FormFactorKind {
        self.kind
    }

    pub fn is_delta(&self) -> bool {
        self.lower == 0 && self.upper == 0
    }

    pub fn steps(&self) -> usize {
        self.rows.len()
    }

    /// Largest `i - j` with `Π_ij ≠ 0`.
    pub fn lower_bandwidth(&self) -> usize {
        self.lower
    }

    /// Largest `j - i` with `Π_ij ≠ 0`.
    pub fn upper_bandwidth(&self) -> usize {
        self.upper
    }

    /// Nonzero entries of row `i` as `(column, weight)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let start = self.starts[i];
        self.rows[i].iter().enumerate().map(move |(k, &w)| (start + k, w))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.steps();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, w) in self.row(i) {
                m[(i, j)] = w;
            }
        }
        m
    }

    pub fn max_row_sum_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn coarse_grain_values(&self, values: &[f64]) -> Vec<f64> {
        (0..self.steps())
            .map(|i| self.row(i).map(|(j, w)| w * values[j]).sum())
            .collect()
    }

    /// `Ā_i = Σ_j Π_ij A_j`.
    pub fn coarse_grain(&self, path: &DiscretePath) -> Result<DiscretePath> {
        if path.len() != self.steps() {
            return Err(Error::DimensionMismatch(format!(
                "path has {} samples, form-factor expects {}",
                path.len(),
                self.steps()
            )));
        }
        Ok(DiscretePath::new(self.coarse_grain_values(path.values())))
    }

    /// Kernel `Π_t` with `Πᵀ_t Π_t ≈ Π` for a symmetric stationary `Π`: a
    /// Gaussian of width τ factors into Gaussians of width τ/√2.
    pub fn factorize(&self, time: &TimeGrid) -> Result<Self> {
        match self.kind {
            FormFactorKind::Delta => Ok(Self::delta(time)),
            FormFactorKind::Gaussian { tau } => Self::gaussian(time, tau / 2f64.sqrt()),
            FormFactorKind::Tabulated => Err(Error::NoFactorization("tabulated")),
        }
    }
}

/// Stationary lag profile `Π(t)` with linear interpolation, zero outside
/// the tabulated range. Rescaled on construction so that `∫ Π dt = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagTable {
    lags: Vec<f64>,
    values: Vec<f64>,
}

impl LagTable {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Table {
                line: 0,
                reason: "empty form-factor table".into(),
            });
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Table {
                line: 0,
                reason: "duplicate lag".into(),
            });
        }
        let integral: f64 = if points.len() == 1 {
            points[0].1
        } else {
            points
                .windows(2)
                .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
                .sum()
        };
        if !integral.is_finite() || integral <= 0.0 {
            return Err(Error::NotNormalizable(format!(
                "form-factor table integrates to {integral}"
            )));
        }
        Ok(Self {
            lags: points.iter().map(|p| p.0).collect(),
            values: points.iter().map(|p| p.1 / integral).collect(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.first().is_some_and(|r| r.len() != 2) {
            return Err(Error::Table {
                line: 1,
                reason: "form-factor table needs two columns (t, Π(t))".into(),
            });
        }
        Self::new(rows.iter().map(|r| (r[0], r[1])).collect())
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_rows(&parse_table(text)?)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let lo = self.lags[0];
        let hi = *self.lags.last().unwrap_or(&lo);
        let slack = 1e-9 * (hi - lo).abs().max(1e-300);
        if t < lo - slack || t > hi + slack {
            return 0.0;
        }
        let t = t.clamp(lo, hi);
        match self.lags.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(k) => self.values[k],
            Err(k) => {
                let (x0, x1) = (self.lags[k - 1], self.lags[k]);
                let (y0, y1) = (self.values[k - 1], self.values[k]);
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
        }
    }
}
