//! The joint chain of two correlated walks on ordered node pairs.
//!
//! Both walks react to the same Node Model events (non-lazy): a walk on the
//! updater stays with probability `alpha` and otherwise jumps to one of the
//! `k` sources. On a `d`-regular graph the stationary law of the pair takes
//! three values, one per distance class (same node, adjacent, further).
//!
//! [`QMatrix::build`] writes the transition entries from their closed form.
//! [`QMatrix::from_process`] derives them by enumerating events, which also
//! covers irregular graphs; the two agree on regular graphs.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dynamics::{binomial, for_each_subset, EventSampler, ModelParams, SelectionEvent};
use crate::graph::{DistanceClasses, Graph, PairClass};
use crate::stats::Moments;
use crate::{Error, Result};

/// Largest `n` for which the `n^2 x n^2` matrix is built.
pub const QCHAIN_CAP: usize = 64;

/// `(mu0, mu1, mu_plus)` with the constants they are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StationaryTriple {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub ell: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub mu_plus: f64,
}

impl StationaryTriple {
    pub fn mu(&self, class: PairClass) -> f64 {
        match class {
            PairClass::Same => self.mu0,
            PairClass::Adjacent => self.mu1,
            PairClass::Far => self.mu_plus,
        }
    }

    /// `n mu0 + n d mu1 + n (n - d - 1) mu_plus`, which is 1.
    pub fn total_mass(&self) -> f64 {
        let (n, d) = (self.n as f64, self.d as f64);
        n * self.mu0 + n * d * self.mu1 + n * (n - d - 1.0) * self.mu_plus
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// `gamma = k(1+alpha) - (1-alpha)`,
/// `ell = 1 / (n (n (d gamma - 2 alpha k) + 2 (1-alpha)(d-k)))`,
/// `mu0 = 2k(d-1) ell`, `mu1 = (d-1) gamma ell`, `mu_plus = (d gamma - 2 alpha k) ell`.
pub fn stationary_closed_form(n: usize, d: usize, k: usize, alpha: f64) -> Result<StationaryTriple> {
    check_alpha(alpha)?;
    if d == 0 || d >= n || !(n * d).is_multiple_of(2) {
        return Err(Error::InvalidParams("no d-regular graph with these n and d"));
    }
    if d < 2 {
        return Err(Error::InvalidParams("the three-value form needs d >= 2"));
    }
    if k == 0 || k > d {
        return Err(Error::InvalidK { k, max: d });
    }
    let (nf, df, kf) = (n as f64, d as f64, k as f64);
    let gamma = kf * (1.0 + alpha) - (1.0 - alpha);
    let far = df * gamma - 2.0 * alpha * kf;
    let ell = 1.0 / (nf * (nf * far + 2.0 * (1.0 - alpha) * (df - kf)));
    Ok(StationaryTriple {
        n,
        d,
        k,
        alpha,
        gamma,
        ell,
        mu0: 2.0 * kf * (df - 1.0) * ell,
        mu1: (df - 1.0) * gamma * ell,
        mu_plus: far * ell,
    })
}

/// Dense transition matrix over ordered pairs; state `(x, y)` has index `x n + y`.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub q: DMatrix<f64>,
}

impl QMatrix {
    pub fn index(&self, x: usize, y: usize) -> usize {
        x * self.n + y
    }

    pub fn entry(&self, from: (usize, usize), to: (usize, usize)) -> f64 {
        self.q[(self.index(from.0, from.1), self.index(to.0, to.1))]
    }

    fn check_size(n: usize) -> Result<()> {
        if n > QCHAIN_CAP {
            return Err(Error::SizeCap { what: "pair chain", n, cap: QCHAIN_CAP });
        }
        Ok(())
    }

    /// Closed-form entries for a `d`-regular graph with `pi_x = 1/n`.
    ///
    /// From `(x, x)`: to `(u, v)`, `u != v` both neighbours,
    /// `(1-a)^2 pi (k-1) / (k d (d-1))`; to `(u, u)`, `(1-a)^2 pi / (k d)`;
    /// to `(x, u)` and `(u, x)`, `a (1-a) pi / d`; stay `a^2 pi + 1 - pi`.
    /// From `(x, y)`, `x != y`: each walk moves alone to a neighbour with
    /// `(1-a) pi / d`; stay `1 - 2 pi + 2 pi a`.
    pub fn build(g: &Graph, k: usize, alpha: f64) -> Result<Self> {
        let d = g.regular_degree().ok_or(Error::NotRegular)?;
        let n = g.n();
        Self::check_size(n)?;
        check_alpha(alpha)?;
        if k == 0 || k > d {
            return Err(Error::InvalidK { k, max: d });
        }
        let (pi, df, kf, a) = (1.0 / n as f64, d as f64, k as f64, alpha);
        let mut q = DMatrix::zeros(n * n, n * n);
        for x in 0..n {
            for y in 0..n {
                let row = x * n + y;
                if x == y {
                    for &u in g.neighbors(x) {
                        for &v in g.neighbors(x) {
                            q[(row, u * n + v)] = if u == v {
                                (1.0 - a) * (1.0 - a) * pi / (kf * df)
                            } else if k >= 2 {
                                (1.0 - a) * (1.0 - a) * pi * (kf - 1.0) / (kf * df * (df - 1.0))
                            } else {
                                0.0
                            };
                        }
                        q[(row, x * n + u)] = a * (1.0 - a) * pi / df;
                        q[(row, u * n + x)] = a * (1.0 - a) * pi / df;
                    }
                    q[(row, row)] = a * a * pi + 1.0 - pi;
                } else {
                    for &v in g.neighbors(y) {
                        q[(row, x * n + v)] += (1.0 - a) * pi / df;
                    }
                    for &u in g.neighbors(x) {
                        q[(row, u * n + y)] += (1.0 - a) * pi / df;
                    }
                    q[(row, row)] += 1.0 - 2.0 * pi + 2.0 * pi * a;
                }
            }
        }
        Ok(QMatrix { n, k, alpha, q })
    }

    /// Entries obtained by enumerating every Node Model event; any connected graph.
    pub fn from_process(g: &Graph, k: usize, alpha: f64) -> Result<Self> {
        let n = g.n();
        Self::check_size(n)?;
        ModelParams::node(alpha, k).validate(g)?;
        let a = alpha;
        let mut q = DMatrix::zeros(n * n, n * n);
        let mut moves: Vec<(usize, f64)> = Vec::new();
        for u in 0..n {
            let subsets = binomial(g.degree(u), k) as f64;
            let w_event = 1.0 / (n as f64 * subsets);
            for_each_subset(g.neighbors(u), k, |s| {
                for x in 0..n {
                    for y in 0..n {
                        // Law of one walk after the event, given where it is.
                        let step = |p: usize, out: &mut Vec<(usize, f64)>| {
                            out.clear();
                            if p == u {
                                out.push((p, a));
                                out.extend(s.iter().map(|&t| (t, (1.0 - a) / k as f64)));
                            } else {
                                out.push((p, 1.0));
                            }
                        };
                        step(x, &mut moves);
                        let mx = moves.clone();
                        step(y, &mut moves);
                        for &(x2, px) in &mx {
                            for &(y2, py) in &moves {
                                q[(x * n + y, x2 * n + y2)] += w_event * px * py;
                            }
                        }
                    }
                }
            });
        }
        Ok(QMatrix { n, k, alpha, q })
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.q.nrows()).map(|i| (self.q.row(i).sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `max |mu Q - mu|`.
    pub fn stationarity_residual(&self, mu: &[f64]) -> f64 {
        let mu = DVector::from_column_slice(mu);
        let moved = self.q.tr_mul(&mu);
        (moved - mu).amax()
    }
}

/// Solves `mu Q = mu`, `sum mu = 1` by LU, with the last balance equation
/// replaced by the normalisation.
pub fn solve_stationary_numeric(q: &QMatrix) -> Result<Vec<f64>> {
    let s = q.q.nrows();
    let mut a = q.q.transpose();
    for i in 0..s {
        a[(i, i)] -= 1.0;
    }
    a.row_mut(s - 1).fill(1.0);
    let mut b = DVector::zeros(s);
    b[s - 1] = 1.0;
    let mu = a.lu().solve(&b).ok_or(Error::Singular)?;
    Ok(mu.iter().copied().collect())
}

/// Closed-form `mu` over all ordered pairs, indexed like [`QMatrix`].
pub fn closed_form_vector(t: &StationaryTriple, classes: &DistanceClasses) -> Vec<f64> {
    let n = t.n;
    (0..n * n).map(|i| t.mu(classes.class(i / n, i % n))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StationaryReport {
    pub triple: StationaryTriple,
    /// `max |mu Q - mu|` for the closed-form `mu`.
    pub residual: f64,
    /// `|sum mu - 1|` for the closed-form `mu`.
    pub sum_error: f64,
    /// Largest spread of the numeric `mu` inside one distance class.
    pub class_spread: f64,
    /// Largest `|numeric - closed form|` over all pairs.
    pub numeric_gap: f64,
    pub row_sum_error: f64,
}

pub fn verify_stationary(g: &Graph, k: usize, alpha: f64) -> Result<StationaryReport> {
    let d = g.regular_degree().ok_or(Error::NotRegular)?;
    let q = QMatrix::build(g, k, alpha)?;
    let triple = stationary_closed_form(g.n(), d, k, alpha)?;
    let classes = DistanceClasses::new(g);
    let closed = closed_form_vector(&triple, &classes);
    let numeric = solve_stationary_numeric(&q)?;
    let n = g.n();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (i, &m) in numeric.iter().enumerate() {
        let c = classes.class(i / n, i % n) as usize;
        lo[c] = lo[c].min(m);
        hi[c] = hi[c].max(m);
    }
    let class_spread = (0..3).filter(|&c| hi[c] >= lo[c]).map(|c| hi[c] - lo[c]).fold(0.0, f64::max);
    Ok(StationaryReport {
        triple,
        residual: q.stationarity_residual(&closed),
        sum_error: (closed.iter().sum::<f64>() - 1.0).abs(),
        class_spread,
        numeric_gap: numeric.iter().zip(&closed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        row_sum_error: q.max_row_sum_error(),
    })
}

/// Empirical class frequencies of a simulated pair of correlated walks.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairOccupancy {
    pub burn_in: u64,
    pub samples: u64,
    /// Frequencies of `S0`, `S1`, `S+`.
    pub frequency: [f64; 3],
    /// Batch-means standard errors of the frequencies.
    pub std_error: [f64; 3],
}

/// Number of batches behind [`PairOccupancy::std_error`].
pub const OCCUPANCY_BATCHES: u64 = 100;

/// Heuristic burn-in used when none is given: `50 n^2` steps.
pub fn default_burn_in(n: usize) -> u64 {
    50 * (n as u64) * (n as u64)
}

/// Drives two walks with non-lazy Node Model events and records the
/// distance class of the pair after every step past the burn-in.
pub fn simulate_pair_occupancy<R: Rng + ?Sized>(
    g: &Graph,
    k: usize,
    alpha: f64,
    start: (usize, usize),
    burn_in: u64,
    samples: u64,
    rng: &mut R,
) -> Result<PairOccupancy> {
    if samples < OCCUPANCY_BATCHES {
        return Err(Error::TooFewTrials { min: OCCUPANCY_BATCHES as usize, got: samples as usize });
    }
    let n = g.n();
    if start.0 >= n || start.1 >= n {
        return Err(Error::NodeOutOfRange { node: start.0.max(start.1), n });
    }
    let mut sampler = EventSampler::new(g, ModelParams::node(alpha, k))?;
    let classes = DistanceClasses::new(g);
    let mut ev = SelectionEvent::default();
    let mut pos = [start.0, start.1];
    let mut advance = |rng: &mut R, pos: &mut [usize; 2]| {
        sampler.sample_into(rng, &mut ev);
        for p in pos.iter_mut().filter(|p| **p == ev.updater) {
            if rng.random::<f64>() >= alpha {
                *p = ev.sources[rng.random_range(0..k)];
            }
        }
    };
    for _ in 0..burn_in {
        advance(rng, &mut pos);
    }
    let batch_len = samples / OCCUPANCY_BATCHES;
    let mut batches = [vec![0.0; OCCUPANCY_BATCHES as usize], vec![0.0; OCCUPANCY_BATCHES as usize], vec![0.0; OCCUPANCY_BATCHES as usize]];
    let mut totals = [0u64; 3];
    for b in 0..OCCUPANCY_BATCHES as usize {
        let mut counts = [0u64; 3];
        for _ in 0..batch_len {
            advance(rng, &mut pos);
            counts[classes.class(pos[0], pos[1]) as usize] += 1;
        }
        for c in 0..3 {
            batches[c][b] = counts[c] as f64 / batch_len as f64;
            totals[c] += counts[c];
        }
    }
    let used = batch_len * OCCUPANCY_BATCHES;
    Ok(PairOccupancy {
        burn_in,
        samples: used,
        frequency: core::array::from_fn(|c| totals[c] as f64 / used as f64),
        std_error: core::array::from_fn(|c| Moments::pairwise(&batches[c]).std_error_of_mean()),
    })
}

/// Expected class frequencies `(n mu0, 2m mu1, (n^2 - n - 2m) mu_plus)`.
pub fn expected_class_mass(t: &StationaryTriple) -> [f64; 3] {
    let (n, d) = (t.n as f64, t.d as f64);
    [n * t.mu0, n * d * t.mu1, (n * n - n - n * d) * t.mu_plus]
}
