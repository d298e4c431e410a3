use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{check_state, PathKernels, SelectiveResult};
use crate::error::{Error, Result};
use crate::lattice::{MonitoredSystem, QuantumState};
use crate::readout::{FormFactor, ReadoutTrajectory};
use crate::transfer::{BandTerms, Contraction, SliceWeight, WindowSpec};

struct ReadoutWeight<'a> {
    terms: &'a BandTerms,
    readout: &'a [f64],
    observable: &'a [f64],
    scale: f64,
}

impl SliceWeight for ReadoutWeight<'_> {
    fn log_weight(&self, s: usize, window: &[usize]) -> f64 {
        self.terms
            .completed(s, window, |d| self.observable[d])
            .map(|(i, mean)| {
                let d = self.readout[i] - mean;
                -self.scale * d * d
            })
            .sum()
    }
}

fn check_form_factor(form_factor: &FormFactor, sys: &MonitoredSystem) -> Result<()> {
    if form_factor.steps() != sys.time.steps() {
        return Err(Error::DimensionMismatch(format!(
            "form-factor has {} samples, time grid has {} steps",
            form_factor.steps(),
            sys.time.steps()
        )));
    }
    Ok(())
}

/// Prepared exact coarse engine, reusable across readouts.
pub(crate) struct CoarseEngine<'a> {
    kernels: PathKernels,
    transition: Vec<C64>,
    terms: BandTerms,
    sys: &'a MonitoredSystem,
    spec: WindowSpec,
}

impl<'a> CoarseEngine<'a> {
    pub fn new(form_factor: &FormFactor, sys: &'a MonitoredSystem) -> Result<Self> {
        check_form_factor(form_factor, sys)?;
        let spec = WindowSpec::selective(form_factor, sys.points());
        spec.check()?;
        let kernels = PathKernels::new(sys)?;
        let transition = kernels.transition();
        Ok(Self {
            kernels,
            transition,
            terms: BandTerms::new(form_factor),
            sys,
            spec,
        })
    }

    pub fn propagate(&self, psi0: &[C64], readout: &ReadoutTrajectory) -> Result<Vec<C64>> {
        readout.expect_len(self.sys.time.steps())?;
        let weight = ReadoutWeight {
            terms: &self.terms,
            readout: readout.values(),
            observable: self.sys.observable.values(),
            scale: self.sys.kappa * self.sys.dt(),
        };
        let initial: Vec<C64> = (&self.kernels.half * nalgebra::DVector::from_column_slice(psi0))
            .iter()
            .copied()
            .collect();
        let last = Contraction {
            spec: self.spec,
            transition: &self.transition,
            weight: &weight,
            slices: self.sys.time.steps(),
        }
        .run(&initial)?;
        Ok((&self.kernels.half * nalgebra::DVector::from_vec(last))
            .iter()
            .copied()
            .collect())
    }
}

/// Conditioned evolution with the finite-resolution weight, computed by an
/// exact windowed contraction of the path sum.
///
/// Fails with [`Error::WindowCap`] when `n_q^(Wn+1)` exceeds the cap; the
/// Monte Carlo estimator is the fallback there.
pub fn evolve_selective_coarse(
    psi0: &QuantumState,
    readout: &ReadoutTrajectory,
    form_factor: &FormFactor,
    sys: &MonitoredSystem,
) -> Result<SelectiveResult> {
    check_state(psi0, sys)?;
    let out = CoarseEngine::new(form_factor, sys)?.propagate(psi0.amplitudes(), readout)?;
    Ok(SelectiveResult::new(QuantumState::new(out, psi0.spacing())?, sys))
}

/// Matrix of the coarse conditioned evolution on amplitude vectors.
pub fn coarse_kernel_operator(
    readout: &ReadoutTrajectory,
    form_factor: &FormFactor,
    sys: &MonitoredSystem,
) -> Result<DMatrix<C64>> {
    let engine = CoarseEngine::new(form_factor, sys)?;
    let n = sys.points();
    let mut m = DMatrix::<C64>::zeros(n, n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        e.fill(C64::new(0.0, 0.0));
        e[k] = C64::new(1.0, 0.0);
        let col = engine.propagate(&e, readout)?;
        m.column_mut(k).copy_from_slice(&col);
    }
    Ok(m)
}
