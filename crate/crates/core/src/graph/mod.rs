//! Simple connected undirected graphs and the structural quantities the
//! dynamics are analysed with.
//!
//! A [`Graph`] is immutable once built. Adjacency is stored in CSR form with
//! every neighbour list sorted, so the directed edge with index `r` (for
//! `r < 2m`) is `(owner(r), targets[r])`; this is what the Edge Model samples.

mod distance;
mod generate;
mod parse;
mod spectral;

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub use distance::{isoperimetric_number, ClassCounts, DistanceClasses, PairClass, ISOPERIMETRIC_CAP};
pub use generate::Family;
pub use parse::{parse_edge_list, LoadedGraph};
pub use spectral::{laplacian_matrix, lazy_walk_matrix, spectral, SpectralSummary, SPECTRAL_CAP};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Graph {
    /// Builds a graph on nodes `0..n` from undirected edges.
    ///
    /// Rejects self-loops, repeated edges (in either orientation), ids
    /// outside `0..n`, graphs with fewer than two nodes and disconnected
    /// graphs. Error line numbers are 1-based positions in `edges`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewNodes { n });
        }
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, &(u, v)) in edges.iter().enumerate() {
            let line = i + 1;
            for node in [u, v] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop { line, node: u as u64 });
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(2 * edges.len());
        offsets.push(0);
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                // Report the first input line carrying the repeated pair.
                let v = w[0];
                let line = edges
                    .iter()
                    .enumerate()
                    .filter(|(_, &(a, b))| (a == u && b == v) || (a == v && b == u))
                    .nth(1)
                    .map_or(0, |(i, _)| i + 1);
                let (a, b) = if u < v { (u, v) } else { (v, u) };
                return Err(Error::DuplicateEdge { line, u: a as u64, v: b as u64 });
            }
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        let graph = Graph { offsets, targets };
        let components = graph.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(graph)
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    pub fn min_degree(&self) -> usize {
        self.degrees().min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().max().unwrap_or(0)
    }

    /// The common degree if every node has the same degree.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        self.degrees().all(|x| x == d).then_some(d)
    }

    pub fn is_regular(&self) -> bool {
        self.regular_degree().is_some()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u).iter().filter(move |&&v| u < v).map(move |&v| (u, v))
        })
    }

    /// The directed edge with index `r`, `0 <= r < 2m`.
    pub fn directed_edge(&self, r: usize) -> (usize, usize) {
        // offsets is non-decreasing; the owner is the last u with offsets[u] <= r.
        let u = self.offsets.partition_point(|&o| o <= r) - 1;
        (u, self.targets[r])
    }

    /// Stationary probability `d_u / 2m` of the (lazy) random walk.
    pub fn stationary(&self, u: usize) -> f64 {
        self.degree(u) as f64 / self.targets.len() as f64
    }

    /// `x^T L x = sum over edges {u,v} of (x_u - x_v)^2`.
    pub fn laplacian_form(&self, x: &[f64]) -> f64 {
        self.edges().map(|(u, v)| (x[u] - x[v]) * (x[u] - x[v])).sum()
    }

    /// Sum of `x_u * x_v` over ordered adjacent pairs.
    pub fn directed_edge_product_sum(&self, x: &[f64]) -> f64 {
        2.0 * self.edges().map(|(u, v)| x[u] * x[v]).sum::<f64>()
    }

    /// Breadth-first distances from `source`; `usize::MAX` marks unreachable.
    pub fn bfs(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn component_count(&self) -> usize {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }
}
