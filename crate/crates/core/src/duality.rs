//! The time-reversed diffusion and the correlated random walks.
//!
//! For a log `chi(1..T)` each event has a backward matrix `B` (the transpose
//! of its forward update matrix). The diffusion consumes the log from the
//! end, so after all `T` events `R = B(chi(1)) B(chi(2)) ... B(chi(T))` and
//! the cost vector `W = xi(0)^T R` equals the forward state `xi(T)^T`.
//! Column `u` of `R` is the load of the commodity that started on `u`, and
//! also the law of a walk started at `u` that follows the same events.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;

use crate::dynamics::{apply_event, EventSampler, ModelKind, ModelParams, SelectionEvent};
use crate::graph::Graph;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventLog {
    pub params: ModelParams,
    pub events: Vec<SelectionEvent>,
}

impl EventLog {
    pub fn new(params: ModelParams) -> Self {
        EventLog { params, events: Vec::new() }
    }

    /// Draws `len` events from the process.
    pub fn sample<R: Rng + ?Sized>(g: &Graph, params: ModelParams, len: usize, rng: &mut R) -> Result<Self> {
        let mut sampler = EventSampler::new(g, params)?;
        let events = (0..len).map(|_| sampler.sample(rng)).collect();
        Ok(EventLog { params, events })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Checks that every event pulls from `k` distinct neighbours of its updater.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        self.params.validate(g)?;
        let k = match self.params.kind {
            ModelKind::Node => self.params.k,
            ModelKind::Edge => 1,
        };
        for (index, ev) in self.events.iter().enumerate() {
            let bad = |reason| Err(Error::InvalidEvent { index, reason });
            if ev.updater >= g.n() {
                return bad("updater out of range");
            }
            if ev.sources.len() != k {
                return bad("wrong number of sources");
            }
            if ev.noop && !self.params.lazy {
                return bad("no-op event in a non-lazy log");
            }
            for (i, &s) in ev.sources.iter().enumerate() {
                if s >= g.n() || !g.has_edge(ev.updater, s) {
                    return bad("source is not a neighbour of the updater");
                }
                if ev.sources[..i].contains(&s) {
                    return bad("repeated source");
                }
            }
        }
        Ok(())
    }
}

/// `B`: identity except column `u`, which holds `alpha` at `u` and
/// `(1-alpha)/k` at each source. Identity for a no-op.
pub fn backward_matrix(ev: &SelectionEvent, alpha: f64, n: usize) -> DMatrix<f64> {
    forward_matrix(ev, alpha, n).transpose()
}

/// `F` with `xi' = F xi`: identity except row `u`.
pub fn forward_matrix(ev: &SelectionEvent, alpha: f64, n: usize) -> DMatrix<f64> {
    let mut f = DMatrix::identity(n, n);
    if !ev.noop {
        let u = ev.updater;
        f[(u, u)] = alpha;
        let w = (1.0 - alpha) / ev.sources.len() as f64;
        for &s in &ev.sources {
            f[(u, s)] += w;
        }
    }
    f
}

/// `R(t)`, dense and row-major; column `u` is commodity `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionState {
    n: usize,
    r: Vec<f64>,
    pub step: usize,
}

impl DiffusionState {
    pub fn identity(n: usize) -> Self {
        let mut r = vec![0.0; n * n];
        for i in 0..n {
            r[i * n + i] = 1.0;
        }
        DiffusionState { n, r, step: 0 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.n + j]
    }

    pub fn column(&self, u: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.entry(i, u)).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n).map(|j| (0..self.n).map(|i| self.entry(i, j)).sum()).collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.r)
    }

    /// `R <- B R` in O(n k): each source row gains `(1-alpha)/k` of row `u`,
    /// then row `u` is scaled by `alpha`.
    pub fn apply(&mut self, ev: &SelectionEvent, alpha: f64) {
        self.step += 1;
        if ev.noop {
            return;
        }
        let n = self.n;
        let u = ev.updater;
        let w = (1.0 - alpha) / ev.sources.len() as f64;
        for &s in &ev.sources {
            for j in 0..n {
                let add = w * self.r[u * n + j];
                self.r[s * n + j] += add;
            }
        }
        self.r[u * n..(u + 1) * n].iter_mut().for_each(|x| *x *= alpha);
    }

    /// `W = cost^T R`.
    pub fn cost(&self, cost: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.n];
        for (i, c) in cost.iter().enumerate() {
            for (wj, rij) in w.iter_mut().zip(&self.r[i * self.n..(i + 1) * self.n]) {
                *wj += c * rij;
            }
        }
        w
    }
}

/// Runs the diffusion over the reversed log and returns `(W, R)`.
pub fn diffuse_backward(cost: &[f64], log: &EventLog) -> (Vec<f64>, DiffusionState) {
    let mut state = DiffusionState::identity(cost.len());
    for ev in log.events.iter().rev() {
        state.apply(ev, log.params.alpha);
    }
    (state.cost(cost), state)
}

/// The forward state after replaying the whole log.
pub fn replay_forward(xi0: &[f64], log: &EventLog) -> Vec<f64> {
    let mut x = xi0.to_vec();
    for ev in &log.events {
        apply_event(&mut x, ev, log.params.alpha);
    }
    x
}

/// `max_u |W(T)_u - xi(T)_u|`.
pub fn duality_check(xi0: &[f64], log: &EventLog) -> f64 {
    let forward = replay_forward(xi0, log);
    let (w, _) = diffuse_backward(xi0, log);
    w.iter().zip(&forward).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Final positions of one walk per start node, all driven by the reversed log.
///
/// A walk sitting on the updater stays with probability `alpha` and
/// otherwise moves to a uniformly chosen source, independently of the other
/// walks.
pub fn correlated_walk_positions<R: Rng + ?Sized>(log: &EventLog, starts: &[usize], rng: &mut R) -> Vec<usize> {
    let mut pos = starts.to_vec();
    let alpha = log.params.alpha;
    for ev in log.events.iter().rev() {
        if ev.noop {
            continue;
        }
        for p in pos.iter_mut().filter(|p| **p == ev.updater) {
            if rng.random::<f64>() >= alpha {
                *p = ev.sources[rng.random_range(0..ev.sources.len())];
            }
        }
    }
    pos
}

/// Per-start occupancy counts after the whole log.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WalkOccupancy {
    pub starts: Vec<usize>,
    pub trials: u64,
    /// `counts[i][v]`: trials in which walk `i` ended on `v`.
    pub counts: Vec<Vec<u64>>,
}

impl WalkOccupancy {
    pub fn empty(starts: &[usize], n: usize) -> Self {
        WalkOccupancy { starts: starts.to_vec(), trials: 0, counts: vec![vec![0; n]; starts.len()] }
    }

    pub fn record(&mut self, positions: &[usize]) {
        self.trials += 1;
        for (row, &p) in self.counts.iter_mut().zip(positions) {
            row[p] += 1;
        }
    }

    pub fn merge(&mut self, other: &WalkOccupancy) {
        self.trials += other.trials;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn frequency(&self, walk: usize, v: usize) -> f64 {
        self.counts[walk][v] as f64 / self.trials as f64
    }

    /// Binomial standard error of [`frequency`](Self::frequency).
    pub fn std_error(&self, walk: usize, v: usize) -> f64 {
        let p = self.frequency(walk, v);
        libm::sqrt(p * (1.0 - p) / self.trials as f64)
    }
}

/// `trials` independent runs of [`correlated_walk_positions`]; trial `i`
/// uses stream `i` of `master_seed`.
pub fn correlated_walks(log: &EventLog, starts: &[usize], n: usize, trials: u64, master_seed: u64) -> WalkOccupancy {
    let mut occ = WalkOccupancy::empty(starts, n);
    for t in 0..trials {
        let pos = correlated_walk_positions(log, starts, &mut rng::stream(master_seed, t));
        occ.record(&pos);
    }
    occ
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Family;

    fn fig1() -> EventLog {
        EventLog {
            params: ModelParams::node(0.5, 1),
            events: vec![SelectionEvent::new(0, vec![1]), SelectionEvent::new(1, vec![0])],
        }
    }

    #[test]
    fn path_instance_columns_and_state() {
        let log = fig1();
        log.validate(&Family::Path { n: 3 }.build().unwrap()).unwrap();
        let xi0 = [4.0, 0.0, 8.0];
        let (w, r) = diffuse_backward(&xi0, &log);
        assert_eq!(r.column(1), vec![0.25, 0.75, 0.0]);
        assert_eq!(w, replay_forward(&xi0, &log));
        assert_eq!(w, vec![2.0, 1.0, 8.0]);
        assert_eq!(duality_check(&xi0, &log), 0.0);
    }

    #[test]
    fn triangle_instance_column() {
        let log = EventLog {
            params: ModelParams::node(0.5, 2),
            events: vec![SelectionEvent::new(0, vec![1, 2]), SelectionEvent::new(1, vec![0, 2])],
        };
        let (_, r) = diffuse_backward(&[0.0; 3], &log);
        assert_eq!(r.column(1), vec![0.125, 0.5625, 0.3125]);
    }

    #[test]
    fn backward_matrix_columns() {
        let b = backward_matrix(&SelectionEvent::new(1, vec![0]), 0.5, 3);
        assert_eq!(b.column(1).iter().copied().collect::<Vec<_>>(), vec![0.5, 0.5, 0.0]);
        assert_eq!(b.column(0)[0], 1.0);
        let b = backward_matrix(&SelectionEvent::new(0, vec![1, 2]), 0.5, 3);
        assert_eq!(b.column(0).iter().copied().collect::<Vec<_>>(), vec![0.5, 0.25, 0.25]);
        let noop = SelectionEvent { updater: 0, sources: vec![1], noop: true };
        assert_eq!(backward_matrix(&noop, 0.5, 3), DMatrix::identity(3, 3));
    }

    #[test]
    fn dense_product_matches_row_updates() {
        let g = Family::Petersen.build().unwrap();
        let log = EventLog::sample(&g, ModelParams::node(0.3, 2), 40, &mut rng::stream(3, 0)).unwrap();
        let mut dense = DMatrix::identity(10, 10);
        for ev in &log.events {
            dense *= backward_matrix(ev, 0.3, 10);
        }
        let (_, r) = diffuse_backward(&[0.0; 10], &log);
        assert!((dense - r.to_matrix()).amax() < 1e-15);
    }

    #[test]
    fn empty_log_is_identity() {
        let log = EventLog::new(ModelParams::edge(0.5));
        let (w, r) = diffuse_backward(&[1.0, 2.0], &log);
        assert_eq!(w, vec![1.0, 2.0]);
        assert_eq!(r, DiffusionState::identity(2));
        assert_eq!(duality_check(&[1.0, 2.0], &log), 0.0);
    }

    #[test]
    fn invalid_events_are_rejected() {
        let g = Family::Cycle { n: 5 }.build().unwrap();
        let mut log = EventLog::new(ModelParams::node(0.5, 1));
        log.events.push(SelectionEvent::new(0, vec![2]));
        assert!(matches!(log.validate(&g), Err(Error::InvalidEvent { index: 0, .. })));
        log.events[0] = SelectionEvent::new(0, vec![1, 4]);
        assert!(log.validate(&g).is_err());
        log.events[0] = SelectionEvent { updater: 0, sources: vec![1], noop: true };
        assert!(log.validate(&g).is_err());
    }

    #[test]
    fn untouched_walk_stays() {
        let log = fig1();
        let occ = correlated_walks(&log, &[2], 3, 1000, 9);
        assert_eq!(occ.counts[0], vec![0, 0, 1000]);
    }
}
