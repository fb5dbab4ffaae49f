use alloc::vec::Vec;

use super::{updated_value, weighted_mean, ModelKind, ModelParams, SelectionEvent};
use crate::graph::Graph;
use crate::{Error, Result};

/// Largest number of equiprobable events [`exact_one_step_expectation`] will enumerate.
pub const ENUMERATION_CAP: u128 = 10_000_000;

/// Exact conditional expectations after one step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OneStepExpectation {
    pub m: f64,
    pub e_m_next: f64,
    /// `E[M'] - M`, summed from per-event increments.
    pub e_delta_m: f64,
    pub sumsq: f64,
    pub e_sumsq_next: f64,
    pub phi: f64,
    pub e_phi_next: f64,
    pub e_avg_next: f64,
    /// `E[Avg'] - Avg`, summed from per-event increments.
    pub e_delta_avg: f64,
    pub events: u128,
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Calls `f` with every `k`-subset of `items`, in lexicographic index order.
pub(crate) fn for_each_subset(items: &[usize], k: usize, mut f: impl FnMut(&[usize])) {
    let d = items.len();
    if k > d {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut chosen: Vec<usize> = idx.iter().map(|&i| items[i]).collect();
    loop {
        f(&chosen);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + d - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
        for j in i..k {
            chosen[j] = items[idx[j]];
        }
    }
}

/// Enumerates every event of one step and averages `M`, `sum xi^2`, `phi`
/// and `Avg` over them, including the lazy no-op branch.
pub fn exact_one_step_expectation(values: &[f64], g: &Graph, params: &ModelParams) -> Result<OneStepExpectation> {
    params.validate(g)?;
    if values.len() != g.n() {
        return Err(Error::StateLength { expected: g.n(), got: values.len() });
    }
    let n = g.n();
    let events: u128 = match params.kind {
        ModelKind::Node => (0..n).map(|u| binomial(g.degree(u), params.k)).sum(),
        ModelKind::Edge => 2 * g.m() as u128,
    };
    if events > ENUMERATION_CAP {
        return Err(Error::EnumerationCap { needed: events, cap: ENUMERATION_CAP });
    }

    let (avg, m) = weighted_mean(values, g);
    let sumsq: f64 = values.iter().map(|x| x * x).sum();
    // Sums relative to M keep phi' free of large cancellations.
    let s2: f64 = values.iter().enumerate().map(|(u, x)| g.stationary(u) * (x - m) * (x - m)).sum();

    let mut acc = [0.0f64; 4]; // delta M, delta sumsq, phi', delta Avg
    let mut add = |u: usize, new: f64, weight: f64| {
        let old = values[u];
        let p = g.stationary(u);
        let dm = p * (new - old);
        let (yo, yn) = (old - m, new - m);
        let phi_next = s2 + p * (yn * yn - yo * yo) - dm * dm;
        acc[0] += weight * dm;
        acc[1] += weight * (new * new - old * old);
        acc[2] += weight * phi_next;
        acc[3] += weight * (new - old) / n as f64;
    };

    let mut ev = SelectionEvent::default();
    match params.kind {
        ModelKind::Edge => {
            let w = 1.0 / (2 * g.m()) as f64;
            for r in 0..2 * g.m() {
                let (u, v) = g.directed_edge(r);
                ev.updater = u;
                ev.sources.clear();
                ev.sources.push(v);
                add(u, updated_value(values, &ev, params.alpha), w);
            }
        }
        ModelKind::Node => {
            for u in 0..n {
                let w = 1.0 / (n as f64 * binomial(g.degree(u), params.k) as f64);
                ev.updater = u;
                for_each_subset(g.neighbors(u), params.k, |subset| {
                    ev.sources.clear();
                    ev.sources.extend_from_slice(subset);
                    add(u, updated_value(values, &ev, params.alpha), w);
                });
            }
        }
    }

    let phi = s2;
    let [mut dm, mut dsq, mut phi_next, mut davg] = acc;
    if params.lazy {
        dm *= 0.5;
        dsq *= 0.5;
        davg *= 0.5;
        phi_next = 0.5 * phi + 0.5 * phi_next;
    }
    Ok(OneStepExpectation {
        m,
        e_m_next: m + dm,
        e_delta_m: dm,
        sumsq,
        e_sumsq_next: sumsq + dsq,
        phi,
        e_phi_next: phi_next,
        e_avg_next: avg + davg,
        e_delta_avg: davg,
        events,
    })
}

/// Exact one-step expectations when each of the `k` pulls is an
/// independent lazy-walk step from the updater: the updater itself with
/// probability 1/2, otherwise a uniform neighbour.
///
/// Returns `(E ||xi'||_pi^2, E phi')`.
pub fn exact_lazy_pull_expectation(values: &[f64], g: &Graph, alpha: f64, k: usize) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if k == 0 {
        return Err(Error::InvalidK { k, max: usize::MAX });
    }
    if values.len() != g.n() {
        return Err(Error::StateLength { expected: g.n(), got: values.len() });
    }
    let n = g.n();
    let events: u128 = (0..n).map(|u| ((g.degree(u) + 1) as u128).saturating_pow(k as u32)).sum();
    if events > ENUMERATION_CAP {
        return Err(Error::EnumerationCap { needed: events, cap: ENUMERATION_CAP });
    }
    let (_, m) = weighted_mean(values, g);
    let s2: f64 = values.iter().enumerate().map(|(u, x)| g.stationary(u) * (x - m) * (x - m)).sum();
    let norm_pi: f64 = values.iter().enumerate().map(|(u, x)| g.stationary(u) * x * x).sum();
    let (mut e_norm, mut e_phi) = (0.0, 0.0);
    let mut choice = alloc::vec![0usize; k];
    for u in 0..n {
        let nbrs = g.neighbors(u);
        let d = nbrs.len();
        // Choice 0 is the updater itself, choice i > 0 is neighbour i - 1.
        let target = |c: usize| if c == 0 { u } else { nbrs[c - 1] };
        let weight = |c: usize| if c == 0 { 0.5 } else { 0.5 / d as f64 };
        choice.iter_mut().for_each(|c| *c = 0);
        loop {
            let w: f64 = choice.iter().map(|&c| weight(c)).product::<f64>() / n as f64;
            let pull: f64 = choice.iter().map(|&c| values[target(c)] - values[u]).sum();
            let new = values[u] + (1.0 - alpha) / k as f64 * pull;
            let old = values[u];
            let p = g.stationary(u);
            let dm = p * (new - old);
            let (yo, yn) = (old - m, new - m);
            e_norm += w * (norm_pi + p * (new * new - old * old));
            e_phi += w * (s2 + p * (yn * yn - yo * yo) - dm * dm);
            let Some(i) = choice.iter().position(|&c| c < d) else { break };
            choice[i] += 1;
            choice[..i].iter_mut().for_each(|c| *c = 0);
        }
    }
    Ok((e_norm, e_phi))
}

/// `||xi||_pi^2 - 2 alpha (1-alpha)/n <xi,(I-P)xi>_pi
/// - (1-alpha)^2/n (1 - 1/k) <xi,(I-P^2)xi>_pi` with `P` the lazy walk.
pub fn lazy_pull_second_moment(values: &[f64], g: &Graph, alpha: f64, k: usize) -> f64 {
    let n = g.n();
    let pi = |u: usize| g.stationary(u);
    let apply_p = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|u| {
                let nb: f64 = g.neighbors(u).iter().map(|&v| x[v]).sum();
                0.5 * x[u] + 0.5 * nb / g.degree(u) as f64
            })
            .collect()
    };
    let inner = |a: &[f64], b: &[f64]| -> f64 { (0..n).map(|u| pi(u) * a[u] * b[u]).sum() };
    let px = apply_p(values);
    let ppx = apply_p(&px);
    let norm = inner(values, values);
    let form1 = norm - inner(values, &px);
    let form2 = norm - inner(values, &ppx);
    let nf = n as f64;
    norm - 2.0 * alpha * (1.0 - alpha) / nf * form1 - (1.0 - alpha) * (1.0 - alpha) / nf * (1.0 - 1.0 / k as f64) * form2
}

/// `1 - (1-alpha)(1-lambda2)[2 alpha + (1-alpha)(1+lambda2)(1-1/k)] / n`.
pub fn potential_drop_factor(alpha: f64, k: usize, lambda2: f64, n: usize) -> f64 {
    let bracket = 2.0 * alpha + (1.0 - alpha) * (1.0 + lambda2) * (1.0 - 1.0 / k as f64);
    1.0 - (1.0 - alpha) * (1.0 - lambda2) * bracket / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Family;
    use alloc::vec;

    #[test]
    fn subsets_are_enumerated_once() {
        let mut seen = Vec::new();
        for_each_subset(&[4, 5, 6, 7], 2, |s| seen.push((s[0], s[1])));
        assert_eq!(seen, vec![(4, 5), (4, 6), (4, 7), (5, 6), (5, 7), (6, 7)]);
        let mut count = 0;
        for_each_subset(&[1, 2, 3], 3, |_| count += 1);
        assert_eq!(count, 1);
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(2, 3), 0);
    }

    #[test]
    fn edge_model_hand_case() {
        let k3 = Family::Complete { n: 3 }.build().unwrap();
        let e = exact_one_step_expectation(&[1.0, 0.0, -1.0], &k3, &ModelParams::edge(0.5)).unwrap();
        assert_eq!(e.sumsq, 2.0);
        assert!((e.e_sumsq_next - 1.5).abs() < 1e-15);
        assert_eq!(e.events, 6);
        assert!(e.e_delta_m.abs() < 1e-15);
    }

    #[test]
    fn constant_state_is_fixed() {
        let g = Family::Petersen.build().unwrap();
        for params in [ModelParams::node(0.2, 3), ModelParams::lazy_node(0.7, 2), ModelParams::edge(0.4)] {
            let e = exact_one_step_expectation(&[1.5; 10], &g, &params).unwrap();
            assert!(e.e_phi_next.abs() < 1e-15);
            assert!((e.e_m_next - 1.5).abs() < 1e-15);
        }
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let g = Family::Complete { n: 40 }.build().unwrap();
        let r = exact_one_step_expectation(&[0.0; 40], &g, &ModelParams::node(0.5, 10));
        assert!(matches!(r, Err(Error::EnumerationCap { .. })));
    }

    #[test]
    fn lazy_pull_matches_second_moment_identity() {
        let g = Family::Path { n: 5 }.build().unwrap();
        let x = [2.0, -1.0, 0.5, 3.0, -4.0];
        for k in 1..=3 {
            let (e_norm, _) = exact_lazy_pull_expectation(&x, &g, 0.3, k).unwrap();
            assert!((e_norm - lazy_pull_second_moment(&x, &g, 0.3, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn drop_factor_at_k1() {
        let f = potential_drop_factor(0.5, 1, 1.0 / 3.0, 4);
        assert!((f - (1.0 - 0.5 * (2.0 / 3.0) * 1.0 / 4.0)).abs() < 1e-15);
    }
}
