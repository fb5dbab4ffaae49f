use alloc::vec::Vec;

use super::Graph;
use crate::{Error, Result};

/// Largest graph accepted by [`isoperimetric_number`].
pub const ISOPERIMETRIC_CAP: usize = 16;

/// Class of an ordered pair by shortest-path distance: 0, 1, or at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PairClass {
    Same,
    Adjacent,
    Far,
}

impl PairClass {
    pub fn of_distance(d: usize) -> Self {
        match d {
            0 => PairClass::Same,
            1 => PairClass::Adjacent,
            _ => PairClass::Far,
        }
    }
}

/// Sizes of `S0`, `S1` and `S+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassCounts {
    pub s0: usize,
    pub s1: usize,
    pub s_plus: usize,
}

/// All-pairs shortest-path distances, row-major.
#[derive(Debug, Clone)]
pub struct DistanceClasses {
    n: usize,
    dist: Vec<usize>,
}

impl DistanceClasses {
    pub fn new(g: &Graph) -> Self {
        let n = g.n();
        let mut dist = Vec::with_capacity(n * n);
        for s in 0..n {
            dist.extend(g.bfs(s));
        }
        DistanceClasses { n, dist }
    }

    pub fn distance(&self, x: usize, y: usize) -> usize {
        self.dist[x * self.n + y]
    }

    pub fn class(&self, x: usize, y: usize) -> PairClass {
        PairClass::of_distance(self.distance(x, y))
    }

    pub fn counts(&self) -> ClassCounts {
        let mut c = ClassCounts { s0: 0, s1: 0, s_plus: 0 };
        for &d in &self.dist {
            match PairClass::of_distance(d) {
                PairClass::Same => c.s0 += 1,
                PairClass::Adjacent => c.s1 += 1,
                PairClass::Far => c.s_plus += 1,
            }
        }
        c
    }
}

/// `min |E(S, V\S)| / |S|` over `1 <= |S| <= n/2`, by exhaustive search.
pub fn isoperimetric_number(g: &Graph) -> Result<f64> {
    let n = g.n();
    if n > ISOPERIMETRIC_CAP {
        return Err(Error::SizeCap { what: "isoperimetric number", n, cap: ISOPERIMETRIC_CAP });
    }
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if 2 * size > n {
            continue;
        }
        let cut = g
            .edges()
            .filter(|&(u, v)| ((mask >> u) & 1) != ((mask >> v) & 1))
            .count();
        best = best.min(cut as f64 / size as f64);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Family;

    #[test]
    fn class_sizes() {
        let cases = [
            (Family::Complete { n: 4 }, (4, 12, 0)),
            (Family::Cycle { n: 4 }, (4, 8, 4)),
            (Family::Hypercube { dim: 3 }, (8, 24, 32)),
        ];
        for (fam, (s0, s1, sp)) in cases {
            let c = DistanceClasses::new(&fam.build().unwrap()).counts();
            assert_eq!(c, ClassCounts { s0, s1, s_plus: sp }, "{fam}");
        }
    }

    #[test]
    fn isoperimetric_small_cases() {
        let c6 = Family::Cycle { n: 6 }.build().unwrap();
        assert_eq!(isoperimetric_number(&c6).unwrap(), 2.0 / 3.0);
        let k4 = Family::Complete { n: 4 }.build().unwrap();
        assert_eq!(isoperimetric_number(&k4).unwrap(), 2.0);
        let big = Family::Cycle { n: 17 }.build().unwrap();
        assert!(isoperimetric_number(&big).is_err());
    }
}
