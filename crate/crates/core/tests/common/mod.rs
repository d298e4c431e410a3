#![allow(dead_code)]

use corridor_core::{HamiltonianSpec, SpatialGrid, C64};
use nalgebra::DMatrix;

/// Kinetic energy spectrum in FFT order, built from the grid alone.
pub fn kinetic_energies(grid: &SpatialGrid, mass: f64, hbar: f64) -> Vec<f64> {
    let n = grid.points();
    let l = grid.extent();
    (0..n)
        .map(|j| {
            let s = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            let k = 2.0 * std::f64::consts::PI * s / l;
            hbar * hbar * k * k / (2.0 * mass)
        })
        .collect()
}

/// `(1/n) Σ_j e^{2πi j (a-b)/n} f(ε_j)` by explicit summation.
pub fn spectral_matrix(grid: &SpatialGrid, mass: f64, hbar: f64, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
    let n = grid.points();
    let eps = kinetic_energies(grid, mass, hbar);
    DMatrix::from_fn(n, n, |a, b| {
        let mut s = C64::new(0.0, 0.0);
        for (j, e) in eps.iter().enumerate() {
            let phase = 2.0 * std::f64::consts::PI * (j as f64) * (a as f64 - b as f64) / n as f64;
            s += C64::from_polar(1.0, phase) * f(*e);
        }
        s / n as f64
    })
}

/// Strang kernel `e^{-iVτ/2ħ} e^{-iTτ/ħ} e^{-iVτ/2ħ}` with the kinetic part by
/// explicit DFT sums.
pub fn strang_kernel(grid: &SpatialGrid, h: &HamiltonianSpec, tau: f64) -> DMatrix<C64> {
    let n = grid.points();
    let kin = if h.kinetic {
        spectral_matrix(grid, h.mass, h.hbar, |e| C64::from_polar(1.0, -e * tau / h.hbar))
    } else {
        DMatrix::identity(n, n)
    };
    let v = DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            C64::from_polar(1.0, -h.potential[a] * tau / (2.0 * h.hbar))
        } else {
            C64::new(0.0, 0.0)
        }
    });
    &v * kin * &v
}

/// Hamiltonian matrix on the grid.
pub fn hamiltonian_matrix(grid: &SpatialGrid, h: &HamiltonianSpec) -> DMatrix<C64> {
    let n = grid.points();
    let mut m = if h.kinetic {
        spectral_matrix(grid, h.mass, h.hbar, |e| C64::new(e, 0.0))
    } else {
        DMatrix::zeros(n, n)
    };
    for k in 0..n {
        m[(k, k)] += C64::new(h.potential[k], 0.0);
    }
    m
}

/// Visits every tuple in `0..base` of length `len`, least significant first.
pub fn for_each_tuple(base: usize, len: usize, mut f: impl FnMut(&[usize])) {
    let mut digits = vec![0usize; len];
    loop {
        f(&digits);
        let mut i = 0;
        loop {
            if i == len {
                return;
            }
            digits[i] += 1;
            if digits[i] < base {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

pub fn max_entry_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
