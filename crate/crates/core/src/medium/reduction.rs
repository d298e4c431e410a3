use super::{log_influence_exact, log_influence_firstorder, PathPair3, TwoTimeKernel};
use crate::error::{invalid, Result};
use crate::lattice::TimeGrid;
use crate::nonselective::{log_influence, InfluenceKernel};
use crate::numerics::{compensated_sum, log_log_slope};
use crate::readout::FormFactor;

/// First-order medium influence against the restricted-path-integral kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduction {
    pub w_model: f64,
    pub w_rpi: f64,
    pub relative_gap: f64,
}

fn rpi_log(pp: &PathPair3, factor: &FormFactor, kappa: f64, dt: f64) -> Result<f64> {
    let kernel = InfluenceKernel::Coarse {
        kappa,
        form_factor: factor.clone(),
    };
    (0..pp.dim())
        .map(|c| {
            let (r1, r2) = pp.component(c);
            log_influence(&r1, &r2, &kernel, dt)
        })
        .sum()
}

/// Evaluates the first-order medium functional with `Π = Π_tᵀ Π_t` and the
/// coarse kernel `exp[-(κ/2) Σ |⟨r₁⟩ - ⟨r₂⟩|² Δt]` with `⟨·⟩` taken through `Π_t`.
pub fn reduce_to_phenomenological(
    pp: &PathPair3,
    form_factor: &FormFactor,
    kappa: f64,
    time: &TimeGrid,
) -> Result<Reduction> {
    let factor = form_factor.factorize(time)?;
    let kernel = TwoTimeKernel::factorized(&factor)?;
    let log_model = log_influence_firstorder(pp, &kernel, kappa, time.dt())?;
    let log_rpi = rpi_log(pp, &factor, kappa, time.dt())?;
    let w_model = log_model.exp();
    let w_rpi = log_rpi.exp();
    Ok(Reduction {
        w_model,
        w_rpi,
        relative_gap: (w_model - w_rpi).abs() / w_rpi,
    })
}

/// Rigorous bound on `|log W_exact - log W_firstorder|` from
/// `|e^{-x} - 1 + x| ≤ x²/2`.
pub fn taylor_remainder_bound(
    pp: &PathPair3,
    kernel: &TwoTimeKernel,
    kappa: f64,
    range: f64,
    dt: f64,
) -> Result<f64> {
    kernel.expect_steps(pp.steps())?;
    let n = pp.steps();
    let b = kernel.band();
    let m = kernel.weights();
    let l2 = 2.0 * range * range;
    let r1 = pp.r1();
    let r2 = pp.r2();
    let sq = |a: &nalgebra::DMatrix<f64>, j: usize, c: &nalgebra::DMatrix<f64>, k: usize| {
        (0..a.ncols()).map(|d| (a[(j, d)] - c[(k, d)]).powi(2)).sum::<f64>() / l2
    };
    let s = compensated_sum((0..n).flat_map(|j| {
        (j.saturating_sub(b)..(j + b + 1).min(n)).map(move |k| {
            let x11 = sq(r1, j, r1, k);
            let x22 = sq(r2, j, r2, k);
            let x21 = sq(r2, j, r1, k);
            m[(j, k)].abs() * 0.5 * (x11 * x11 + x22 * x22 + 2.0 * x21 * x21)
        })
    }));
    Ok(0.5 * kappa * range * range * s * dt)
}

/// One point of a displacement-scale sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub scale: f64,
    /// Largest separation `R` after scaling.
    pub displacement: f64,
    pub log_exact: f64,
    pub log_firstorder: f64,
    /// `|log W_exact - log W_firstorder| / |log W_firstorder|`.
    pub relative_gap: f64,
    pub taylor_bound: f64,
    /// `|W_exact - W_rpi| / W_rpi` when a factor `Π_t` is supplied.
    pub rpi_gap: Option<f64>,
}

/// Scales the path pair by each factor and compares the exact and
/// first-order medium functionals on the same kernel.
pub fn displacement_sweep(
    pp: &PathPair3,
    kernel: &TwoTimeKernel,
    factor: Option<&FormFactor>,
    kappa: f64,
    range: f64,
    dt: f64,
    scales: &[f64],
) -> Result<Vec<SweepPoint>> {
    scales
        .iter()
        .map(|&scale| {
            let p = pp.scaled(scale);
            let log_exact = log_influence_exact(&p, kernel, kappa, range, dt)?;
            let log_firstorder = log_influence_firstorder(&p, kernel, kappa, dt)?;
            let rpi_gap = match factor {
                Some(f) => {
                    let w = rpi_log(&p, f, kappa, dt)?.exp();
                    Some((log_exact.exp() - w).abs() / w)
                }
                None => None,
            };
            Ok(SweepPoint {
                scale,
                displacement: p.max_displacement(),
                log_exact,
                log_firstorder,
                relative_gap: (log_exact - log_firstorder).abs() / log_firstorder.abs(),
                taylor_bound: taylor_remainder_bound(&p, kernel, kappa, range, dt)?,
                rpi_gap,
            })
        })
        .collect()
}

/// Fit of `relative_gap ≤ C (R/l)²` over a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityFit {
    /// Smallest `C` bounding every point.
    pub coefficient: f64,
    /// Log-log slope of the gap against `R`.
    pub slope: f64,
    /// Gap strictly increasing with the displacement scale.
    pub monotone: bool,
}

pub fn fit_validity_curve(points: &[SweepPoint], range: f64) -> Result<ValidityFit> {
    if points.len() < 2 {
        return Err(invalid("sweep", "needs at least two points"));
    }
    let coefficient = points
        .iter()
        .map(|p| p.relative_gap / (p.displacement / range).powi(2))
        .fold(0.0, f64::max);
    let r: Vec<f64> = points.iter().map(|p| p.displacement).collect();
    let g: Vec<f64> = points.iter().map(|p| p.relative_gap).collect();
    let monotone = points.windows(2).all(|w| w[1].relative_gap > w[0].relative_gap);
    Ok(ValidityFit {
        coefficient,
        slope: log_log_slope(&r, &g),
        monotone,
    })
}
