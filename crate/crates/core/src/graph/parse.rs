use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use super::Graph;
use crate::{Error, Result};

/// A graph read from edge-list text together with the external node labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// `labels[i]` is the external id of internal node `i`.
    pub labels: Vec<u64>,
}

impl LoadedGraph {
    /// True when the external ids already were `0..n`.
    pub fn is_identity(&self) -> bool {
        self.labels.iter().enumerate().all(|(i, &l)| l == i as u64)
    }
}

/// Parses whitespace-separated `u v` pairs, one per line.
///
/// Text after `#` is ignored, as are blank lines. External ids are mapped
/// onto `0..n` in increasing order.
pub fn parse_edge_list(text: &str) -> Result<LoadedGraph> {
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let malformed = || Error::MalformedLine { line: line_no, text: line.to_string() };
        let mut fields = body.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(malformed());
        };
        let u: u64 = a.parse().map_err(|_| malformed())?;
        let v: u64 = b.parse().map_err(|_| malformed())?;
        if u == v {
            return Err(Error::SelfLoop { line: line_no, node: u });
        }
        raw.push((line_no, u, v));
    }

    let mut index: BTreeMap<u64, usize> = BTreeMap::new();
    for &(_, u, v) in &raw {
        index.insert(u, 0);
        index.insert(v, 0);
    }
    let labels: Vec<u64> = index.keys().copied().collect();
    for (i, slot) in index.values_mut().enumerate() {
        *slot = i;
    }

    let mut seen = BTreeMap::new();
    let mut edges = Vec::with_capacity(raw.len());
    for &(line, u, v) in &raw {
        let key = (u.min(v), u.max(v));
        if seen.insert(key, line).is_some() {
            return Err(Error::DuplicateEdge { line, u: key.0, v: key.1 });
        }
        edges.push((index[&u], index[&v]));
    }
    let graph = Graph::from_edges(labels.len(), &edges)?;
    Ok(LoadedGraph { graph, labels })
}
