use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use super::Graph;
use crate::rng;
use crate::{Error, Result};

/// Rejected pairings tolerated before random regular generation gives up.
pub const PAIRING_RETRIES: usize = 1000;

/// Graph families with a textual form such as `cycle:8` or `random-regular:12,4,7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "family"))]
pub enum Family {
    Path { n: usize },
    Cycle { n: usize },
    Complete { n: usize },
    Hypercube { dim: u32 },
    /// `C_rows x C_cols` with wrap-around, 4-regular.
    Torus { rows: usize, cols: usize },
    Petersen,
    /// Configuration model with rejection of loops, multi-edges and
    /// disconnected samples.
    RandomRegular { n: usize, d: usize, seed: u64 },
}

impl Family {
    pub fn build(&self) -> Result<Graph> {
        match *self {
            Family::Path { n } => {
                let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
                Graph::from_edges(n, &edges)
            }
            Family::Cycle { n } => {
                if n < 3 {
                    return Err(infeasible(format!("cycle needs n >= 3, got {n}")));
                }
                let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
                Graph::from_edges(n, &edges)
            }
            Family::Complete { n } => {
                let edges: Vec<_> =
                    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
                Graph::from_edges(n, &edges)
            }
            Family::Hypercube { dim } => {
                if !(1..=20).contains(&dim) {
                    return Err(infeasible(format!("hypercube dimension {dim} not in 1..=20")));
                }
                let n = 1usize << dim;
                let edges: Vec<_> = (0..n)
                    .flat_map(|u| (0..dim).map(move |b| (u, u ^ (1 << b))))
                    .filter(|&(u, v)| u < v)
                    .collect();
                Graph::from_edges(n, &edges)
            }
            Family::Torus { rows, cols } => {
                if rows < 3 || cols < 3 {
                    return Err(infeasible(format!("torus needs both sides >= 3, got {rows}x{cols}")));
                }
                let id = |r: usize, c: usize| r * cols + c;
                let mut edges = Vec::with_capacity(2 * rows * cols);
                for r in 0..rows {
                    for c in 0..cols {
                        edges.push((id(r, c), id(r, (c + 1) % cols)));
                        edges.push((id(r, c), id((r + 1) % rows, c)));
                    }
                }
                Graph::from_edges(rows * cols, &edges)
            }
            Family::Petersen => {
                let mut edges = Vec::with_capacity(15);
                for i in 0..5 {
                    edges.push((i, (i + 1) % 5));
                    edges.push((i, i + 5));
                    edges.push((5 + i, 5 + (i + 2) % 5));
                }
                Graph::from_edges(10, &edges)
            }
            Family::RandomRegular { n, d, seed } => random_regular(n, d, seed),
        }
    }
}

fn infeasible(msg: String) -> Error {
    Error::InfeasibleFamily(msg)
}

fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d == 0 || d >= n || !(n * d).is_multiple_of(2) {
        return Err(infeasible(format!(
            "random regular needs 1 <= d < n and n*d even, got n={n}, d={d}"
        )));
    }
    if d == 1 && n != 2 {
        return Err(infeasible(format!("a 1-regular graph on {n} nodes is disconnected")));
    }
    let mut rng = rng::stream(seed, 0);
    let mut stubs: Vec<usize> = (0..n * d).map(|i| i / d).collect();
    let mut adjacency: Vec<Vec<usize>> = (0..n).map(|_| Vec::with_capacity(d)).collect();
    'attempt: for _ in 0..PAIRING_RETRIES {
        for i in (1..stubs.len()).rev() {
            let j = rng.random_range(0..=i);
            stubs.swap(i, j);
        }
        adjacency.iter_mut().for_each(Vec::clear);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || adjacency[u].contains(&v) {
                continue 'attempt;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let edges: Vec<_> = stubs.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        match Graph::from_edges(n, &edges) {
            Ok(g) => return Ok(g),
            Err(Error::Disconnected { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::PairingRetriesExhausted { attempts: PAIRING_RETRIES })
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::Path { n } => write!(f, "path:{n}"),
            Family::Cycle { n } => write!(f, "cycle:{n}"),
            Family::Complete { n } => write!(f, "complete:{n}"),
            Family::Hypercube { dim } => write!(f, "hypercube:{dim}"),
            Family::Torus { rows, cols } => write!(f, "torus:{rows}x{cols}"),
            Family::Petersen => f.write_str("petersen"),
            Family::RandomRegular { n, d, seed } => write!(f, "random-regular:{n},{d},{seed}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownFamily(s.to_string());
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = |sep: char| -> Result<Vec<u64>> {
            args.split(sep).map(|a| a.trim().parse::<u64>().map_err(|_| unknown())).collect()
        };
        let one = || -> Result<usize> {
            match nums(',')?.as_slice() {
                [x] => Ok(*x as usize),
                _ => Err(unknown()),
            }
        };
        Ok(match name.trim() {
            "path" => Family::Path { n: one()? },
            "cycle" => Family::Cycle { n: one()? },
            "complete" => Family::Complete { n: one()? },
            "hypercube" => Family::Hypercube { dim: one()? as u32 },
            "petersen" if args.is_empty() => Family::Petersen,
            "torus" => match nums('x')?.as_slice() {
                [r, c] => Family::Torus { rows: *r as usize, cols: *c as usize },
                _ => return Err(unknown()),
            },
            "random-regular" => match nums(',')?.as_slice() {
                [n, d, seed] => Family::RandomRegular { n: *n as usize, d: *d as usize, seed: *seed },
                _ => return Err(unknown()),
            },
            _ => return Err(unknown()),
        })
    }
}
