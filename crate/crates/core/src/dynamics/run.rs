use alloc::vec::Vec;

use rand::Rng;

use super::{apply_event, potential, weighted_mean, EventSampler, ModelKind, ModelParams, SelectionEvent, StateVector};
use crate::graph::{Graph, SpectralSummary};
use crate::{Error, Result};

/// Steps between unconditional full recomputations of the tracked sums.
pub const REFRESH_INTERVAL: u64 = 1_000_000;

/// Largest accepted gap between tracked and recomputed `phi`, relative to
/// `max(1, phi)`.
pub const DRIFT_TOLERANCE: f64 = 1e-8;

/// Tracks `phi`, `M` and `Avg` under single-coordinate updates in O(1).
///
/// Sums are kept relative to a shift `c` (the value of `M` at the last
/// refresh) to limit cancellation. A refresh recomputes everything from
/// the state; it happens every [`REFRESH_INTERVAL`] steps and whenever
/// `phi` has fallen by four orders of magnitude since the last refresh.
#[derive(Debug, Clone)]
pub struct PotentialTracker {
    pi: Vec<f64>,
    shift: f64,
    s1: f64,
    s2: f64,
    a1: f64,
    phi_at_refresh: f64,
    since_refresh: u64,
    max_drift: f64,
}

impl PotentialTracker {
    pub fn new(values: &[f64], g: &Graph) -> Self {
        let mut t = PotentialTracker {
            pi: (0..g.n()).map(|u| g.stationary(u)).collect(),
            shift: 0.0,
            s1: 0.0,
            s2: 0.0,
            a1: 0.0,
            phi_at_refresh: 0.0,
            since_refresh: 0,
            max_drift: 0.0,
        };
        t.recompute(values);
        t
    }

    fn recompute(&mut self, values: &[f64]) {
        let n = values.len() as f64;
        self.shift = values.iter().zip(&self.pi).map(|(x, p)| p * x).sum();
        self.s1 = 0.0;
        self.s2 = 0.0;
        self.a1 = 0.0;
        for (x, p) in values.iter().zip(&self.pi) {
            let y = x - self.shift;
            self.s1 += p * y;
            self.s2 += p * y * y;
            self.a1 += y / n;
        }
        self.phi_at_refresh = self.phi();
        self.since_refresh = 0;
    }

    /// Recomputes from `values` and records the drift of the tracked `phi`.
    pub fn refresh(&mut self, values: &[f64]) -> f64 {
        let tracked = self.phi();
        self.recompute(values);
        let drift = (tracked - self.phi()).abs() / self.phi().max(1.0);
        self.max_drift = self.max_drift.max(drift);
        drift
    }

    /// Records that coordinate `u` went from `old` to `new`.
    #[inline]
    pub fn update(&mut self, u: usize, old: f64, new: f64, values: &[f64]) {
        let (yo, yn) = (old - self.shift, new - self.shift);
        let p = self.pi[u];
        self.s1 += p * (yn - yo);
        self.s2 += p * (yn * yn - yo * yo);
        self.a1 += (yn - yo) / values.len() as f64;
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_INTERVAL || self.phi() <= 1e-4 * self.phi_at_refresh {
            self.refresh(values);
        }
    }

    pub fn phi(&self) -> f64 {
        (self.s2 - self.s1 * self.s1).max(0.0)
    }

    pub fn weighted_mean(&self) -> f64 {
        self.shift + self.s1
    }

    pub fn average(&self) -> f64 {
        self.shift + self.a1
    }

    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunOptions {
    pub epsilon: f64,
    pub max_steps: u64,
    /// Emit a trace row every `stride` steps; `None` disables the trace.
    pub trace_stride: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRow {
    pub step: u64,
    /// Updater of the event that produced this row; `None` at step 0.
    pub updater: Option<usize>,
    pub phi: f64,
    pub m: f64,
    pub avg: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunResult {
    /// First step with `phi <= epsilon`; `None` if `max_steps` ran out.
    pub t_eps: Option<u64>,
    pub steps: u64,
    pub final_m: f64,
    pub final_avg: f64,
    pub final_phi: f64,
    pub final_state: StateVector,
    pub trace: Vec<TraceRow>,
    pub max_drift: f64,
}

impl RunResult {
    pub fn converged(&self) -> bool {
        self.t_eps.is_some()
    }
}

/// Runs until `phi <= epsilon` or `max_steps` steps have been taken.
///
/// `phi` is tested after every step from the tracker; a hit is confirmed by
/// a full recomputation before it is accepted.
pub fn run_to_convergence<R: Rng + ?Sized>(
    state0: &StateVector,
    g: &Graph,
    params: &ModelParams,
    opts: &RunOptions,
    rng: &mut R,
) -> Result<RunResult> {
    state0.check_len(g)?;
    if !(opts.epsilon > 0.0 && opts.epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(opts.epsilon));
    }
    let mut sampler = EventSampler::new(g, *params)?;
    let mut state = state0.clone();
    let mut tracker = PotentialTracker::new(&state.values, g);
    let mut trace = Vec::new();
    let row = |step, updater, t: &PotentialTracker| TraceRow {
        step,
        updater,
        phi: t.phi(),
        m: t.weighted_mean(),
        avg: t.average(),
    };
    if opts.trace_stride.is_some() {
        trace.push(row(state.step, None, &tracker));
    }
    let start = state.step;
    let mut converged = tracker.phi() <= opts.epsilon;
    let mut ev = SelectionEvent::default();
    let mut last_updater = None;
    while !converged && state.step - start < opts.max_steps {
        sampler.sample_into(rng, &mut ev);
        let old = apply_event(&mut state.values, &ev, params.alpha);
        state.step += 1;
        last_updater = Some(ev.updater);
        if !ev.noop {
            tracker.update(ev.updater, old, state.values[ev.updater], &state.values);
        }
        if tracker.phi() <= opts.epsilon {
            tracker.refresh(&state.values);
            converged = tracker.phi() <= opts.epsilon;
        }
        if let Some(stride) = opts.trace_stride {
            if (state.step - start).is_multiple_of(stride.max(1)) {
                trace.push(row(state.step, last_updater, &tracker));
            }
        }
    }
    tracker.refresh(&state.values);
    if let Some(last) = trace.last() {
        if last.step != state.step {
            trace.push(row(state.step, last_updater, &tracker));
        }
    }
    let (final_avg, final_m) = weighted_mean(&state.values, g);
    Ok(RunResult {
        t_eps: converged.then_some(state.step - start),
        steps: state.step - start,
        final_m,
        final_avg,
        final_phi: potential(&state.values, g),
        max_drift: tracker.max_drift(),
        final_state: state,
        trace,
    })
}

/// `100 * ceil(n ln(n ||xi0||^2 / eps) / (1 - lambda2(P)))` for the Node
/// Model, `100 * ceil(m ln(n ||xi0||^2 / eps) / lambda2(L))` for the Edge
/// Model. The logarithm is floored at 1.
pub fn default_max_steps(
    g: &Graph,
    s: &SpectralSummary,
    kind: ModelKind,
    xi0: &[f64],
    epsilon: f64,
) -> u64 {
    let norm_sq: f64 = xi0.iter().map(|x| x * x).sum();
    let n = g.n() as f64;
    let log = libm::log(n * norm_sq / epsilon).max(1.0);
    let base = match kind {
        ModelKind::Node => n * log / (1.0 - s.lambda2_p),
        ModelKind::Edge => g.m() as f64 * log / s.lambda2_l,
    };
    100 * libm::ceil(base) as u64
}
