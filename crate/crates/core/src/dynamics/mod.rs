//! Forward simulation of the Node and Edge Models.
//!
//! One step picks a [`SelectionEvent`] and applies it with [`apply_event`].
//! The same function replays logged events, so a replay is bit-identical
//! to the run that produced the log.

mod exact;
mod run;

use alloc::vec::Vec;

use rand::Rng;

use crate::graph::{Graph, SpectralSummary};
use crate::{Error, Result};

pub(crate) use exact::{binomial, for_each_subset};
pub use exact::{
    exact_lazy_pull_expectation, exact_one_step_expectation, lazy_pull_second_moment, potential_drop_factor, OneStepExpectation, ENUMERATION_CAP};
pub use run::{default_max_steps, run_to_convergence, PotentialTracker, RunOptions, RunResult, TraceRow, DRIFT_TOLERANCE, REFRESH_INTERVAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ModelKind {
    /// A uniform node pulls `k` distinct uniform neighbours.
    Node,
    /// A uniform directed edge `(u, v)`; `u` pulls `v`.
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    pub kind: ModelKind,
    pub alpha: f64,
    pub k: usize,
    /// Node Model only: each step is skipped with probability 1/2.
    pub lazy: bool,
}

impl ModelParams {
    pub fn node(alpha: f64, k: usize) -> Self {
        ModelParams { kind: ModelKind::Node, alpha, k, lazy: false }
    }

    pub fn lazy_node(alpha: f64, k: usize) -> Self {
        ModelParams { kind: ModelKind::Node, alpha, k, lazy: true }
    }

    pub fn edge(alpha: f64) -> Self {
        ModelParams { kind: ModelKind::Edge, alpha, k: 1, lazy: false }
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        match self.kind {
            ModelKind::Node => {
                let max = g.min_degree();
                if self.k == 0 || self.k > max {
                    return Err(Error::InvalidK { k: self.k, max });
                }
            }
            ModelKind::Edge => {
                if self.k != 1 {
                    return Err(Error::InvalidK { k: self.k, max: 1 });
                }
                if self.lazy {
                    return Err(Error::InvalidParams("the edge model has no lazy variant"));
                }
            }
        }
        Ok(())
    }
}

/// Who updates and whom it pulls from. `sources` keeps the sampling order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SelectionEvent {
    pub updater: usize,
    pub sources: Vec<usize>,
    pub noop: bool,
}

impl SelectionEvent {
    pub fn new(updater: usize, sources: Vec<usize>) -> Self {
        SelectionEvent { updater, sources, noop: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateVector {
    pub values: Vec<f64>,
    pub step: u64,
}

impl StateVector {
    pub fn new(values: Vec<f64>) -> Self {
        StateVector { values, step: 0 }
    }

    pub fn check_len(&self, g: &Graph) -> Result<()> {
        if self.values.len() != g.n() {
            return Err(Error::StateLength { expected: g.n(), got: self.values.len() });
        }
        Ok(())
    }
}

/// Draws selection events for one graph and parameter set.
///
/// Node Model draw order: the lazy coin (if lazy), the updater, then a
/// partial Fisher–Yates shuffle of its neighbour list for the first `k`
/// positions. Lazy no-op events still carry a full draw.
#[derive(Debug, Clone)]
pub struct EventSampler<'g> {
    graph: &'g Graph,
    params: ModelParams,
    scratch: Vec<usize>,
}

impl<'g> EventSampler<'g> {
    pub fn new(graph: &'g Graph, params: ModelParams) -> Result<Self> {
        params.validate(graph)?;
        Ok(EventSampler { graph, params, scratch: Vec::with_capacity(graph.max_degree()) })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> SelectionEvent {
        let mut ev = SelectionEvent::default();
        self.sample_into(rng, &mut ev);
        ev
    }

    /// Overwrites `ev`, reusing its allocation.
    pub fn sample_into<R: Rng + ?Sized>(&mut self, rng: &mut R, ev: &mut SelectionEvent) {
        ev.sources.clear();
        match self.params.kind {
            ModelKind::Edge => {
                let (u, v) = self.graph.directed_edge(rng.random_range(0..2 * self.graph.m()));
                ev.updater = u;
                ev.sources.push(v);
                ev.noop = false;
            }
            ModelKind::Node => {
                ev.noop = self.params.lazy && rng.random_bool(0.5);
                let u = rng.random_range(0..self.graph.n());
                let nbrs = self.graph.neighbors(u);
                self.scratch.clear();
                self.scratch.extend_from_slice(nbrs);
                for i in 0..self.params.k {
                    let j = rng.random_range(i..nbrs.len());
                    self.scratch.swap(i, j);
                }
                ev.updater = u;
                ev.sources.extend_from_slice(&self.scratch[..self.params.k]);
            }
        }
    }
}

/// New value of the updater under `ev`: `alpha * own + (1 - alpha)/k * sum(sources)`.
///
/// Evaluated as `own + (1 - alpha)/k * sum(source - own)`, which leaves
/// equal values exactly unchanged.
#[inline]
pub fn updated_value(values: &[f64], ev: &SelectionEvent, alpha: f64) -> f64 {
    let own = values[ev.updater];
    let pull: f64 = ev.sources.iter().map(|&s| values[s] - own).sum();
    own + (1.0 - alpha) / ev.sources.len() as f64 * pull
}

/// Applies `ev` in place and returns the updater's previous value.
#[inline]
pub fn apply_event(values: &mut [f64], ev: &SelectionEvent, alpha: f64) -> f64 {
    let old = values[ev.updater];
    if !ev.noop {
        values[ev.updater] = updated_value(values, ev, alpha);
    }
    old
}

/// One step of the process: sample an event, apply it, advance the clock.
pub fn step<R: Rng + ?Sized>(
    state: &mut StateVector,
    sampler: &mut EventSampler<'_>,
    rng: &mut R,
) -> SelectionEvent {
    let ev = sampler.sample(rng);
    apply_event(&mut state.values, &ev, sampler.params.alpha);
    state.step += 1;
    ev
}

/// `Avg = mean(xi)` and `M = sum_u (d_u / 2m) xi_u`.
pub fn weighted_mean(values: &[f64], g: &Graph) -> (f64, f64) {
    let avg = values.iter().sum::<f64>() / values.len() as f64;
    let m = values.iter().enumerate().map(|(u, x)| g.stationary(u) * x).sum();
    (avg, m)
}

/// `phi = <xi, xi>_pi - <1, xi>_pi^2`, evaluated as `sum_u pi_u (xi_u - M)^2`.
pub fn potential(values: &[f64], g: &Graph) -> f64 {
    let (_, m) = weighted_mean(values, g);
    values
        .iter()
        .enumerate()
        .map(|(u, x)| g.stationary(u) * (x - m) * (x - m))
        .sum()
}

/// `phi = 1/2 sum_{u,v} pi_u pi_v (xi_u - xi_v)^2`, quadratic time.
pub fn potential_pairwise(values: &[f64], g: &Graph) -> f64 {
    let n = values.len();
    let mut total = 0.0;
    for u in 0..n {
        for v in 0..n {
            let d = values[u] - values[v];
            total += g.stationary(u) * g.stationary(v) * d * d;
        }
    }
    0.5 * total
}

/// `max - min` of the values.
pub fn discrepancy(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo
}

/// Shifts `values` so that `M = 0`.
pub fn center(values: &mut [f64], g: &Graph) {
    let (_, m) = weighted_mean(values, g);
    values.iter_mut().for_each(|x| *x -= m);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Operator {
    /// The lazy walk matrix.
    P,
    /// The Laplacian.
    L,
}

/// `scale * f2` for the chosen operator.
pub fn eigenvector_initial_state(s: &SpectralSummary, which: Operator, scale: f64) -> StateVector {
    let f = match which {
        Operator::P => &s.f2_p,
        Operator::L => &s.f2_l,
    };
    StateVector::new(f.iter().map(|x| scale * x).collect())
}
