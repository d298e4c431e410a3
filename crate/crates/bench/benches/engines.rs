use std::hint::black_box;

use corridor_core::nonselective::{lindblad_evolve, readout_average, superpropagate, AverageMode, InfluenceKernel, SuperMode};
use corridor_core::selective::{evolve_selective_coarse, EffectivePropagator};
use corridor_core::{
    DensityMatrixGrid, FormFactor, HamiltonianSpec, MonitoredSystem, QuantumState, ReadoutTrajectory, SpatialGrid,
    TimeGrid,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn system(n: usize, steps: usize) -> MonitoredSystem {
    let grid = SpatialGrid::new(8.0, n).unwrap();
    let h = HamiltonianSpec::harmonic(&grid, 1.0, 0.7);
    MonitoredSystem::monitoring_position(grid, TimeGrid::new(1.0, steps).unwrap(), h, 1.0).unwrap()
}

fn effective_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("effective_step");
    for n in [256, 1024, 4096] {
        let sys = system(n, 100);
        let prop = EffectivePropagator::new(&sys).unwrap();
        let psi = QuantumState::gaussian(&sys.grid, 0.0, 1.0, 0.5, 1.0);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            let mut amps = psi.amplitudes().to_vec();
            b.iter(|| prop.apply(black_box(&mut amps), 0.1));
        });
    }
    g.finish();
}

fn averaged(c: &mut Criterion) {
    let mut g = c.benchmark_group("nonselective_n16_N64");
    g.sample_size(20);
    let sys = system(16, 64);
    let psi = QuantumState::gaussian(&sys.grid, 0.0, 1.0, 0.5, 1.0);
    let rho = DensityMatrixGrid::from_pure(&psi);
    g.bench_function("lindblad", |b| b.iter(|| lindblad_evolve(black_box(&rho), &sys).unwrap()));
    g.bench_function("readout_average", |b| {
        b.iter(|| readout_average(black_box(&psi), &sys, None, AverageMode::ClosedForm).unwrap())
    });
    g.bench_function("superpropagate", |b| {
        b.iter(|| superpropagate(black_box(&rho), &InfluenceKernel::Ideal { kappa: 1.0 }, &sys, SuperMode::Exact).unwrap())
    });
    g.finish();
}

fn coarse(c: &mut Criterion) {
    let mut g = c.benchmark_group("coarse_transfer");
    g.sample_size(10);
    for n in [4, 8] {
        let sys = system(n, 20);
        let ff = FormFactor::gaussian(&sys.time, 0.5 * sys.dt()).unwrap();
        let psi = QuantumState::gaussian(&sys.grid, 0.0, 1.0, 0.5, 1.0);
        let readout = ReadoutTrajectory::constant(20, 0.2);
        g.bench_with_input(BenchmarkId::new("selective", n), &n, |b, _| {
            b.iter(|| evolve_selective_coarse(black_box(&psi), &readout, &ff, &sys).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, effective_step, averaged, coarse);
criterion_main!(benches);
