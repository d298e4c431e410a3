use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};

use super::{check_state, EffectivePropagator};
use crate::error::{Error, Result};
use crate::lattice::{MonitoredSystem, QuantumState};
use crate::readout::{readout_measure_factor, seeded_rng, ReadoutTrajectory};

/// A readout drawn from its own probability law together with the
/// normalized conditioned state.
#[derive(Debug, Clone)]
pub struct MonitoredRun {
    pub readout: ReadoutTrajectory,
    pub state: QuantumState,
}

/// Draws a readout sequentially from `P[a]` and follows the conditioned state.
///
/// At each step the readout density is the mixture
/// `Σ_k |U(Δt/2)ψ|²_k Δq · N(A_k, 1/(4κΔt))`, so a grid index is drawn first
/// and then a Gaussian around its observable value. `observer(i, ψ)` sees the
/// normalized state after step `i`.
pub fn sample_monitored_trajectory<F>(
    psi0: &QuantumState,
    sys: &MonitoredSystem,
    seed: u64,
    mut observer: F,
) -> Result<MonitoredRun>
where
    F: FnMut(usize, &QuantumState),
{
    check_state(psi0, sys)?;
    readout_measure_factor(sys.kappa, sys.dt())?;
    let prop = EffectivePropagator::new(sys)?;
    let observable = sys.observable.values();
    let sd = (4.0 * sys.kappa * sys.dt()).sqrt().recip();
    let mut rng = seeded_rng(seed, 0);
    let mut state = psi0.clone().normalized();
    let mut readout = Vec::with_capacity(sys.time.steps());
    let mut probs = vec![0.0; sys.points()];
    for i in 0..sys.time.steps() {
        let amps = state.amplitudes_mut();
        prop.half_step().apply(amps);
        for (p, z) in probs.iter_mut().zip(amps.iter()) {
            *p = z.norm_sqr();
        }
        let pick = WeightedIndex::new(&probs)
            .map_err(|e| Error::NotNormalizable(format!("conditioned state at step {i}: {e}")))?;
        let k = pick.sample(&mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        let a = observable[k] + sd * z;
        prop.filter(amps, a);
        prop.half_step().apply(amps);
        readout.push(a);
        state = state.normalized();
        observer(i, &state);
    }
    Ok(MonitoredRun {
        readout: ReadoutTrajectory::new(readout)?,
        state,
    })
}
