//! Exact transfer contraction for path sums whose weight is nonlocal in time.
//!
//! A path is a sequence of digits `d_0 .. d_{N-1}` (grid indices, or index
//! pairs for doubled paths). Between consecutive slices the amplitude picks
//! up `T[d_{s+1}, d_s]`; additionally a real log-weight is attached to each
//! slice that may depend on the previous `window` digits. The contraction
//! carries the last `max(window, 1)` digits as an augmented state, so its
//! cost is `base^(max(window,1)+1)` per slice.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::readout::FormFactor;

/// Exact engines refuse augmented (transient) dimensions above this.
pub const AUGMENTED_DIMENSION_CAP: f64 = 1e8;

/// Memory layout of a windowed contraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    /// Number of past slices a completed weight term may reference (`Wn`).
    pub window: usize,
    /// Digits per slice: `n_q` for a single path, `n_q²` for a path pair.
    pub base: usize,
}

impl WindowSpec {
    /// Window for a selective path weighted through `form_factor`.
    pub fn selective(form_factor: &FormFactor, points: usize) -> Self {
        Self {
            window: form_factor.lower_bandwidth() + form_factor.upper_bandwidth(),
            base: points,
        }
    }

    /// Window for a doubled path with a weight of the given reach.
    pub fn doubled(window: usize, points: usize) -> Self {
        Self {
            window,
            base: points * points,
        }
    }

    pub fn stored_slices(&self) -> usize {
        self.window.max(1)
    }

    /// `base^(stored + 1)`: the number of transient entries visited per slice.
    pub fn augmented_dimension(&self) -> f64 {
        (self.base as f64).powi(self.stored_slices() as i32 + 1)
    }

    pub fn check(&self) -> Result<()> {
        let dimension = self.augmented_dimension();
        if dimension > AUGMENTED_DIMENSION_CAP {
            Err(Error::WindowCap {
                dimension,
                cap: AUGMENTED_DIMENSION_CAP,
            })
        } else {
            Ok(())
        }
    }
}

/// Log-weight attached to slice `s`.
///
/// `window[window.len() - 1 - lag]` is the digit at slice `s - lag`. Entries
/// for negative slices are padding and must not be read.
pub(crate) trait SliceWeight: Sync {
    fn log_weight(&self, s: usize, window: &[usize]) -> f64;
}

pub(crate) struct Contraction<'a, W: SliceWeight> {
    pub spec: WindowSpec,
    /// Row-major `base × base`, `transition[to * base + from]`.
    pub transition: &'a [C64],
    pub weight: &'a W,
    pub slices: usize,
}

impl<W: SliceWeight> Contraction<'_, W> {
    /// Contracts the path sum seeded with `initial` (amplitude of `d_0`) and
    /// returns the amplitude of the final digit `d_{N-1}`.
    pub fn run(&self, initial: &[C64]) -> Result<Vec<C64>> {
        self.spec.check()?;
        let b = self.spec.base;
        let w = self.spec.stored_slices();
        assert_eq!(initial.len(), b);
        assert_eq!(self.transition.len(), b * b);
        let size = b.pow(w as u32);
        let top = b.pow(w as u32 - 1);

        let mut state = vec![C64::new(0.0, 0.0); size];
        for (d, amp) in initial.iter().enumerate() {
            if *amp != C64::new(0.0, 0.0) {
                state[d] = amp * self.weight.log_weight(0, &[d]).exp();
            }
        }

        const CHUNK: usize = 256;
        for s in 1..self.slices {
            let mut next = vec![C64::new(0.0, 0.0); size];
            next.par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| {
                    let mut win = vec![0usize; w + 1];
                    for (off, out) in chunk.iter_mut().enumerate() {
                        let idx = c * CHUNK + off;
                        let rest = idx / b;
                        let mut r = rest;
                        for slot in win[1..w].iter_mut().rev() {
                            *slot = r % b;
                            r /= b;
                        }
                        win[w] = idx % b;
                        let mut acc = C64::new(0.0, 0.0);
                        for oldest in 0..b {
                            let amp = state[oldest * top + rest];
                            if amp == C64::new(0.0, 0.0) {
                                continue;
                            }
                            win[0] = oldest;
                            let t = self.transition[win[w] * b + win[w - 1]];
                            if t == C64::new(0.0, 0.0) {
                                continue;
                            }
                            acc += amp * t * self.weight.log_weight(s, &win).exp();
                        }
                        *out = acc;
                    }
                });
            state = next;
        }

        let mut last = vec![C64::new(0.0, 0.0); b];
        for (idx, amp) in state.iter().enumerate() {
            last[idx % b] += amp;
        }
        Ok(last)
    }
}

/// Coarse-grained samples `Ā_i = Σ_j Π_ij A_j`, each scheduled at the slice
/// where its last contributing sample becomes known.
pub(crate) struct BandTerms {
    /// `per_slice[s]` lists `(i, taps)` with `taps = [(s - j, Π_ij)]`.
    per_slice: Vec<Vec<(usize, Vec<(usize, f64)>)>>,
}

impl BandTerms {
    pub fn new(form_factor: &FormFactor) -> Self {
        let n = form_factor.steps();
        let mut per_slice = vec![Vec::new(); n];
        for i in 0..n {
            let entries: Vec<(usize, f64)> = form_factor.row(i).collect();
            let last = entries.iter().map(|e| e.0).max().unwrap_or(i);
            let taps = entries.iter().map(|&(j, w)| (last - j, w)).collect();
            per_slice[last].push((i, taps));
        }
        Self { per_slice }
    }

    /// Iterates `(i, Ā_i)` for the samples completed at slice `s`, with
    /// `value(d)` giving the sample value of digit `d`.
    pub fn completed<'a>(
        &'a self,
        s: usize,
        window: &'a [usize],
        value: impl Fn(usize) -> f64 + 'a,
    ) -> impl Iterator<Item = (usize, f64)> + 'a {
        let top = window.len() - 1;
        self.per_slice[s].iter().map(move |(i, taps)| {
            let mean = taps.iter().map(|&(lag, w)| w * value(window[top - lag])).sum();
            (*i, mean)
        })
    }
}
