//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::time::Instant;

use common::{for_each_tuple, max_entry_diff, strang_kernel};
use corridor_cli::run::convergence::{resolution_levels, Level};
use corridor_cli::run::zeno::zeno_points;
use corridor_cli::{path_corpus, replay, run_scenario, Command, Scenario, ScenarioConfig};
use corridor_core::medium::{
    displacement_sweep, fit_validity_curve, form_factor_from_medium, reduce_to_phenomenological,
    verify_r2_identity, CouplingSpectrum, MediumSpec, SpectralDensity,
};
use corridor_core::nonselective::{
    check_generalized_unitarity, influence_eval, lindblad_evolve, readout_average, superpropagate,
    AverageMode, InfluenceKernel, SuperMode, UnitarityMode,
};
use corridor_core::numerics::{halving_orders, log_log_slope, max_abs_diff};
use corridor_core::readout::{weight_coarse, weight_ideal};
use corridor_core::selective::{evolve_selective_coarse, evolve_selective_ideal};
use corridor_core::{
    DensityMatrixGrid, DiscretePath, FormFactor, HamiltonianSpec, MonitoredSystem, QuantumState,
    ReadoutTrajectory, SpatialGrid, TimeGrid, C64,
};
use nalgebra::DMatrix;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn scenario(file: &str) -> Scenario {
    let dir = std::path::absolute(scenarios_dir()).unwrap();
    ScenarioConfig::load(&dir.join(file)).unwrap().validate(&dir).unwrap()
}

fn scenario_from(text: &str) -> Scenario {
    let dir = std::path::absolute(scenarios_dir()).unwrap();
    ScenarioConfig::parse(text).unwrap().validate(&dir).unwrap()
}

fn system(extent: f64, n: usize, duration: f64, steps: usize, h: impl Fn(&SpatialGrid) -> HamiltonianSpec, kappa: f64) -> MonitoredSystem {
    let grid = SpatialGrid::new(extent, n).unwrap();
    let h = h(&grid);
    MonitoredSystem::monitoring_position(grid, TimeGrid::new(duration, steps).unwrap(), h, kappa).unwrap()
}

fn richardson(fine: &DensityMatrixGrid, coarse: &DensityMatrixGrid) -> DensityMatrixGrid {
    let m = (fine.entries() * C64::new(4.0, 0.0) - coarse.entries()) / C64::new(3.0, 0.0);
    DensityMatrixGrid::new(m, fine.spacing()).unwrap()
}

fn three_engines(psi0: &QuantumState, sys: &MonitoredSystem) -> [DensityMatrixGrid; 3] {
    let rho0 = DensityMatrixGrid::from_pure(psi0);
    let lind = lindblad_evolve(&rho0, sys).unwrap();
    let avg = readout_average(psi0, sys, None, AverageMode::GaussHermite { nodes: 60 }).unwrap().rho;
    let sup = superpropagate(&rho0, &InfluenceKernel::Ideal { kappa: sys.kappa }, sys, SuperMode::Exact)
        .unwrap()
        .rho;
    [lind, avg, sup]
}

fn max_pairwise(r: &[DensityMatrixGrid]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            d = d.max(r[i].max_abs_diff(&r[j]));
        }
    }
    d
}

fn triangle() -> Outcome {
    let clock = Instant::now();
    let h = |g: &SpatialGrid| HamiltonianSpec::free(g, 1.0);
    let coarse_sys = system(8.0, 16, 1.0, 64, h, 1.0);
    let fine_sys = system(8.0, 16, 1.0, 128, h, 1.0);
    let psi0 = QuantumState::gaussian(&coarse_sys.grid, 0.0, 1.0, 1.0, 1.0);
    let coarse = three_engines(&psi0, &coarse_sys);
    let fine = three_engines(&psi0, &fine_sys);
    let raw = max_pairwise(&fine);
    let ex: Vec<DensityMatrixGrid> = fine.iter().zip(&coarse).map(|(f, c)| richardson(f, c)).collect();
    let d = max_pairwise(&ex);
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        d < 1e-6 && secs < 60.0,
        format!("n=16 N=64->128 extrapolated max distance {d:.3e} (raw at N=128 {raw:.3e}), {secs:.2} s"),
    )
}

fn decoherence() -> Outcome {
    let (kappa, t) = (0.8, 1.0);
    let sys = system(8.0, 16, t, 20, HamiltonianSpec::zero, kappa);
    let psi0 = QuantumState::gaussian(&sys.grid, 0.4, 1.1, 0.7, 1.0);
    let rho0 = DensityMatrixGrid::from_pure(&psi0);
    let q = sys.grid.coordinates();
    let want = DMatrix::from_fn(16, 16, |k, l| {
        rho0.entries()[(k, l)] * (-0.5 * kappa * (q[k] - q[l]).powi(2) * t).exp()
    });
    let errs: Vec<f64> = three_engines(&psi0, &sys)
        .iter()
        .map(|r| max_entry_diff(r.entries(), &want))
        .collect();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    outcome(
        worst < 1e-8,
        format!("lindblad {:.2e}, readout-average {:.2e}, superprop {:.2e}", errs[0], errs[1], errs[2]),
    )
}

fn unitarity() -> Outcome {
    let harm = |g: &SpatialGrid| HamiltonianSpec::harmonic(g, 1.0, 0.8);
    let sys = system(6.0, 8, 0.8, 8, harm, 1.0);
    let ideal = check_generalized_unitarity(&sys, None, UnitarityMode::Exact).unwrap();

    let ff = FormFactor::gaussian(&sys.time, 0.5 * sys.dt()).unwrap();
    let mc = check_generalized_unitarity(&sys, Some(&ff), UnitarityMode::MonteCarlo { samples: 20000, seed: 5 }).unwrap();
    let se = mc.standard_error.as_ref().unwrap();
    let mut worst_z = 0.0f64;
    for k in 0..8 {
        for l in 0..8 {
            let one = if k == l { 1.0 } else { 0.0 };
            let d = (mc.operator[(k, l)] - one).norm();
            if d > 0.0 {
                worst_z = worst_z.max(d / se[(k, l)]);
            }
        }
    }

    let small = system(4.0, 4, 0.6, 6, harm, 1.0);
    let small_ideal = check_generalized_unitarity(&small, None, UnitarityMode::Exact).unwrap().deviation;
    let mut limit = Vec::new();
    for f in [0.4, 0.2, 0.1] {
        let ff = FormFactor::gaussian(&small.time, f * small.dt()).unwrap();
        let exact = check_generalized_unitarity(&small, Some(&ff), UnitarityMode::Exact).unwrap().deviation;
        let mc = check_generalized_unitarity(&small, Some(&ff), UnitarityMode::MonteCarlo { samples: 4000, seed: 9 })
            .unwrap();
        limit.push((f, exact, mc.deviation, mc.deviation_error.unwrap_or(0.0)));
    }
    let limit_ok = limit.iter().all(|(_, e, _, _)| (e - small_ideal).abs() < 1e-10)
        && limit.windows(2).all(|w| w[1].3 <= w[0].3);
    let limit_txt: Vec<String> = limit
        .iter()
        .map(|(f, e, m, s)| format!("tau={f}dt exact {e:.1e} mc {m:.1e}+-{s:.1e}"))
        .collect();
    outcome(
        ideal.deviation < 1e-10 && worst_z <= 5.0 && limit_ok,
        format!(
            "ideal {:.2e}; coarse mc n=8 tau=dt/2 {:.2e}+-{:.2e} (max |M-1|/SE {worst_z:.2}); {}",
            ideal.deviation,
            mc.deviation,
            mc.deviation_error.unwrap_or(0.0),
            limit_txt.join(", ")
        ),
    )
}

fn enum_system(n: usize, steps: usize, kappa: f64) -> MonitoredSystem {
    system(
        4.0,
        n,
        0.6,
        steps,
        |g| {
            let v = g.coordinates().iter().map(|q| 0.3 * q * q - 0.2 * q).collect();
            HamiltonianSpec::free(g, 1.0).with_potential(v)
        },
        kappa,
    )
}

fn selective_sum(sys: &MonitoredSystem, psi0: &QuantumState, weight: impl Fn(&DiscretePath) -> f64) -> Vec<C64> {
    let n = sys.points();
    let steps = sys.time.steps();
    let half = strang_kernel(&sys.grid, &sys.hamiltonian, 0.5 * sys.dt());
    let full = &half * &half;
    let a = sys.observable.values();
    let mut last = vec![C64::new(0.0, 0.0); n];
    for_each_tuple(n, steps + 1, |t| {
        let (k0, m) = (t[0], &t[1..]);
        let mut amp = half[(m[0], k0)] * psi0.amplitudes()[k0];
        for i in 1..steps {
            amp *= full[(m[i], m[i - 1])];
        }
        let path = DiscretePath::new(m.iter().map(|&k| a[k]).collect());
        last[m[steps - 1]] += amp * weight(&path);
    });
    (0..n).map(|k| (0..n).map(|m| half[(k, m)] * last[m]).sum()).collect()
}

fn doubled_sum(sys: &MonitoredSystem, rho0: &DMatrix<C64>, kernel: &InfluenceKernel) -> DMatrix<C64> {
    let n = sys.points();
    let steps = sys.time.steps();
    let half = strang_kernel(&sys.grid, &sys.hamiltonian, 0.5 * sys.dt());
    let full = &half * &half;
    let a = sys.observable.values();
    let sigma0 = &half * rho0 * half.adjoint();
    let mut x = DMatrix::<C64>::zeros(n, n);
    for_each_tuple(n, 2 * steps, |t| {
        let ket: Vec<usize> = (0..steps).map(|i| t[2 * i]).collect();
        let bra: Vec<usize> = (0..steps).map(|i| t[2 * i + 1]).collect();
        let mut amp = sigma0[(ket[0], bra[0])];
        for i in 1..steps {
            amp *= full[(ket[i], ket[i - 1])] * full[(bra[i], bra[i - 1])].conj();
        }
        let q = DiscretePath::new(ket.iter().map(|&k| a[k]).collect());
        let qp = DiscretePath::new(bra.iter().map(|&k| a[k]).collect());
        x[(ket[steps - 1], bra[steps - 1])] += amp * influence_eval(&q, &qp, kernel, sys.dt()).unwrap();
    });
    &half * x * half.adjoint()
}

fn enumeration() -> Outcome {
    let wavy = |steps: usize| {
        ReadoutTrajectory::new((0..steps).map(|i| 0.7 * (1.3 * i as f64).sin() - 0.2).collect()).unwrap()
    };
    let sys = enum_system(6, 6, 1.4);
    let psi0 = QuantumState::gaussian(&sys.grid, 0.2, 0.8, 0.9, 1.0);
    let r = wavy(6);
    let got = evolve_selective_ideal(&psi0, &r, &sys).unwrap();
    let want = selective_sum(&sys, &psi0, |p| weight_ideal(p, &r, sys.kappa, sys.dt()).unwrap());
    let e_ideal = max_abs_diff(got.state.amplitudes(), &want);

    let sys = enum_system(4, 8, 1.0);
    let ff = FormFactor::gaussian(&sys.time, 0.06).unwrap();
    let psi0 = QuantumState::gaussian(&sys.grid, 0.1, 0.9, -0.3, 1.0);
    let r = wavy(8);
    let got = evolve_selective_coarse(&psi0, &r, &ff, &sys).unwrap();
    let want = selective_sum(&sys, &psi0, |p| weight_coarse(p, &r, &ff, sys.kappa, sys.dt()).unwrap());
    let e_coarse = max_abs_diff(got.state.amplitudes(), &want);

    let sys = enum_system(4, 4, 1.2);
    let a = DensityMatrixGrid::from_pure(&QuantumState::gaussian(&sys.grid, 0.3, 0.7, 0.5, 1.0));
    let b = DensityMatrixGrid::from_pure(&QuantumState::gaussian(&sys.grid, -0.4, 0.9, -0.8, 1.0));
    let rho0 = DensityMatrixGrid::new(a.entries() * C64::new(0.6, 0.0) + b.entries() * C64::new(0.4, 0.0), a.spacing())
        .unwrap();
    let gauss = FormFactor::gaussian(&sys.time, 0.08).unwrap();
    let mut e_super = 0.0f64;
    for kernel in [
        InfluenceKernel::Ideal { kappa: 1.2 },
        InfluenceKernel::Coarse {
            kappa: 1.2,
            form_factor: gauss,
        },
    ] {
        let got = superpropagate(&rho0, &kernel, &sys, SuperMode::Exact).unwrap().rho;
        e_super = e_super.max(max_entry_diff(got.entries(), &doubled_sum(&sys, rho0.entries(), &kernel)));
    }
    outcome(
        e_ideal < 1e-10 && e_coarse < 1e-10 && e_super < 1e-10,
        format!(
            "selective ideal n=6 N=6 {e_ideal:.2e}, coarse n=4 N=8 {e_coarse:.2e}, superprop n=4 N=4 {e_super:.2e}"
        ),
    )
}

fn r2_identity() -> Outcome {
    let time = TimeGrid::new(1.0, 40).unwrap();
    let corpus = path_corpus(100, 40, 3, 1.0, 21);
    let mut worst = 0.0f64;
    for (i, pp) in corpus.iter().enumerate() {
        let tau = (0.5 + 0.05 * i as f64) * time.dt();
        let factor = FormFactor::gaussian(&time, tau).unwrap();
        worst = worst.max(verify_r2_identity(pp, &factor, time.dt()).unwrap().abs_diff);
    }
    outcome(worst < 1e-12, format!("100 instances, N=40, max |lhs - rhs| {worst:.2e}"))
}

fn reduction() -> Outcome {
    let time = TimeGrid::new(1.0, 32).unwrap();
    let ff = FormFactor::gaussian(&time, 0.0625).unwrap();
    let mut worst = 0.0f64;
    for pp in path_corpus(100, 32, 3, 0.5, 33) {
        worst = worst.max(reduce_to_phenomenological(&pp, &ff, 2.0, &time).unwrap().relative_gap);
    }
    let range = 1.0;
    let density = SpectralDensity::Medium(MediumSpec {
        density: 1.0,
        range,
        oscillator_mass: 1.0,
        hbar: 1.0,
        coupling: CouplingSpectrum::GaussianBand {
            gamma0: 1.0,
            center: 0.0,
            width: 8.0,
        },
    });
    let medium = form_factor_from_medium(&density, range, &time, None).unwrap();
    let pp = &path_corpus(1, 32, 3, 0.5, 34)[0];
    let scales: Vec<f64> = (0..6).map(|k| 0.01 * 2f64.powi(k)).collect();
    let points = displacement_sweep(pp, &medium.kernel, None, medium.kappa, range, time.dt(), &scales).unwrap();
    let fit = fit_validity_curve(&points, range).unwrap();
    let bounded = points
        .iter()
        .all(|p| p.relative_gap <= fit.coefficient * (p.displacement / range).powi(2) * (1.0 + 1e-12));
    outcome(
        worst < 1e-10 && fit.monotone && bounded && (fit.slope - 2.0).abs() < 0.1,
        format!(
            "max relative gap {worst:.2e} over 100 instances; sweep monotone={} slope {:.4} C={:.3e}",
            fit.monotone, fit.slope, fit.coefficient
        ),
    )
}

fn orders(levels: &[Level]) -> Vec<f64> {
    let e: Vec<f64> = levels.iter().map(|l| l.error).collect();
    halving_orders(&e)
}

fn resolution_order() -> Outcome {
    let two = scenario("convergence_tau.toml");
    let a = resolution_levels(&two, 4).unwrap();
    let four = scenario_from(
        r#"
[grid]
extent = 4.0
points = 4
duration = 0.6
steps = 6
[physics]
kappa = 1.0
potential = { kind = "harmonic", omega = 0.8 }
[initial]
center = 0.3
momentum = 0.5
[measurement]
form_factor = { kind = "gaussian", tau = 0.04 }
[run]
seed = 1
"#,
    );
    let b = resolution_levels(&four, 3).unwrap();
    let oa = orders(&a);
    let ob = orders(&b);
    let worst = oa
        .iter()
        .chain(&ob)
        .copied()
        .filter(|o| o.is_finite())
        .fold(f64::INFINITY, f64::min);
    let fmt = |l: &[Level], o: &[f64]| {
        let e: Vec<String> = l.iter().map(|l| format!("{:.2e}", l.error)).collect();
        let o: Vec<String> = o.iter().map(|o| format!("{o:.2}")).collect();
        format!("errors [{}] orders [{}]", e.join(", "), o.join(", "))
    };
    outcome(
        worst >= 1.8,
        format!(
            "n=2 tau0=dt: {}; n=4 tau0=0.4dt: {}; min order {worst:.2}",
            fmt(&a, &oa),
            fmt(&b, &ob)
        ),
    )
}

fn factorization() -> Outcome {
    let n = 128;
    let t = TimeGrid::new(1.0, n).unwrap();
    let tau = 8.0 * t.dt();
    let pi = FormFactor::gaussian(&t, tau).unwrap().to_dense();
    let pt = FormFactor::gaussian(&t, tau).unwrap().factorize(&t).unwrap();
    let h = pt.upper_bandwidth();
    let p = pt.to_dense();
    let recon = p.transpose() * &p;
    let mut err = 0.0f64;
    for j in 2 * h..n - 2 * h {
        for k in 0..n {
            err = err.max((pi[(j, k)] - recon[(j, k)]).abs());
        }
    }
    outcome(err < 1e-6, format!("N=128 tau=8dt, rows {}..{}: max |Pt^T Pt - Pi| {err:.2e}", 2 * h, n - 2 * h))
}

fn zeno() -> Outcome {
    let s = scenario("zeno_sweep.toml");
    let points = zeno_points(&s).unwrap();
    let k: Vec<f64> = points.iter().map(|p| p.kappa).collect();
    let v: Vec<f64> = points.iter().map(|p| p.variance).collect();
    let monotone = v.windows(2).all(|w| w[1] < w[0]);
    let last = points.last().unwrap();
    outcome(
        monotone,
        format!(
            "{} kappas {:.0e}..{:.0e}: variance {:.3e} -> {:.3e}, slope {:.3}, strongest vs sqrt(1/kappa)/2 {:.4e}",
            points.len(),
            k[0],
            last.kappa,
            v[0],
            last.variance,
            log_log_slope(&k, &v),
            0.5 / last.kappa.sqrt()
        ),
    )
}

fn reruns() -> Outcome {
    let runs = [
        ("evolve_free.toml", Command::Evolve),
        ("evolve_coarse.toml", Command::Evolve),
        ("average_triangle.toml", Command::Average),
        ("decoherence_h0.toml", Command::Average),
        ("unitarity_ideal.toml", Command::UnitarityCheck),
        ("unitarity_coarse.toml", Command::UnitarityCheck),
        ("medium_compare.toml", Command::MediumCompare),
        ("convergence_dt.toml", Command::Convergence),
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut bad = Vec::new();
    let mut files = 0;
    for (file, cmd) in runs {
        let out = tmp.path().join(file.trim_end_matches(".toml"));
        let first = run_scenario(cmd, &scenario(file), &out).unwrap();
        files += first.outputs.len();
        let again = replay(&out.join("manifest.toml"), None).unwrap();
        if !again.identical() {
            bad.push(format!("{file}: {}", again.mismatches.join(",")));
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} scenarios, {files} output files identical on rerun", runs.len())
        } else {
            bad.join("; ")
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("engine triangle", triangle),
        ("free decoherence", decoherence),
        ("generalized unitarity", unitarity),
        ("path enumeration", enumeration),
        ("r2 identity", r2_identity),
        ("medium reduction", reduction),
        ("resolution order", resolution_order),
        ("factorization", factorization),
        ("zeno sweep", zeno),
        ("manifest rerun", reruns),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let o = f();
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {} ({:.1} s)",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            clock.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
