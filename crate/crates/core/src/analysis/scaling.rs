use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::TrialRunner;
use crate::dynamics::{
    default_max_steps, eigenvector_initial_state, potential, run_to_convergence, ModelKind, ModelParams, Operator,
    RunOptions,
};
use crate::graph::{spectral, Graph, SpectralSummary};
use crate::{rng, Error, Family, Result};

/// One-parameter families swept by [`convergence_scaling_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ScalingFamily {
    Cycle,
    Complete,
    /// Size is the number of nodes, a power of two.
    Hypercube,
}

impl ScalingFamily {
    pub fn at(self, n: usize) -> Result<Family> {
        Ok(match self {
            ScalingFamily::Cycle => Family::Cycle { n },
            ScalingFamily::Complete => Family::Complete { n },
            ScalingFamily::Hypercube => {
                if !n.is_power_of_two() {
                    return Err(Error::InfeasibleFamily(alloc::format!("hypercube size {n} is not a power of two")));
                }
                Family::Hypercube { dim: n.trailing_zeros() }
            }
        })
    }
}

impl fmt::Display for ScalingFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalingFamily::Cycle => "cycle",
            ScalingFamily::Complete => "complete",
            ScalingFamily::Hypercube => "hypercube",
        })
    }
}

impl FromStr for ScalingFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cycle" => Ok(ScalingFamily::Cycle),
            "complete" => Ok(ScalingFamily::Complete),
            "hypercube" => Ok(ScalingFamily::Hypercube),
            _ => Err(Error::UnknownFamily(s.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingRow {
    pub n: usize,
    pub m: usize,
    /// `lambda2(P)` for the Node Model, `lambda2(L)` for the Edge Model.
    pub lambda2: f64,
    pub norm_sq: f64,
    pub median_t: f64,
    pub bound: f64,
    pub ratio: f64,
    pub unconverged: u64,
}

/// `n ln(n ||xi0||^2 / eps) / (1 - lambda2(P))` for the Node Model and
/// `m ln(n ||xi0||^2 / eps) / lambda2(L)` for the Edge Model.
pub fn scaling_bound(g: &Graph, s: &SpectralSummary, kind: ModelKind, norm_sq: f64, epsilon: f64) -> f64 {
    let log = libm::log(g.n() as f64 * norm_sq / epsilon);
    match kind {
        ModelKind::Node => g.n() as f64 * log / (1.0 - s.lambda2_p),
        ModelKind::Edge => g.m() as f64 * log / s.lambda2_l,
    }
}

fn median(sorted: &[f64]) -> f64 {
    let len = sorted.len();
    if len % 2 == 1 {
        sorted[len / 2]
    } else {
        0.5 * (sorted[len / 2 - 1] + sorted[len / 2])
    }
}

/// Median `T_eps` over `seeds` runs from `n f2` (of `P` for the Node Model,
/// of `L` for the Edge Model). Runs that hit the step cap count at the cap.
pub fn scaling_instance<T: TrialRunner>(
    g: &Graph,
    params: &ModelParams,
    epsilon: f64,
    seeds: u64,
    master_seed: u64,
    runner: &T,
) -> Result<ScalingRow> {
    if seeds == 0 {
        return Err(Error::TooFewTrials { min: 1, got: 0 });
    }
    let s = spectral(g)?;
    let (op, lambda2) = match params.kind {
        ModelKind::Node => (Operator::P, s.lambda2_p),
        ModelKind::Edge => (Operator::L, s.lambda2_l),
    };
    let x0 = eigenvector_initial_state(&s, op, g.n() as f64);
    let norm_sq: f64 = x0.values.iter().map(|x| x * x).sum();
    let max_steps = default_max_steps(g, &s, params.kind, &x0.values, epsilon);
    let opts = RunOptions { epsilon, max_steps, trace_stride: None };
    let runs: Result<Vec<_>> = runner
        .run(seeds, |i| run_to_convergence(&x0, g, params, &opts, &mut rng::stream(master_seed, i)))
        .into_iter()
        .collect();
    let runs = runs?;
    let mut times: Vec<f64> = runs.iter().map(|r| r.t_eps.unwrap_or(max_steps) as f64).collect();
    times.sort_by(f64::total_cmp);
    let median_t = median(&times);
    let (bound, ratio) = if potential(&x0.values, g) <= epsilon {
        (0.0, 0.0)
    } else {
        let b = scaling_bound(g, &s, params.kind, norm_sq, epsilon);
        (b, median_t / b)
    };
    Ok(ScalingRow {
        n: g.n(),
        m: g.m(),
        lambda2,
        norm_sq,
        median_t,
        bound,
        ratio,
        unconverged: runs.iter().filter(|r| r.t_eps.is_none()).count() as u64,
    })
}

/// One [`ScalingRow`] per size; every size reuses the same master seed.
pub fn convergence_scaling_experiment<T: TrialRunner>(
    family: ScalingFamily,
    sizes: &[usize],
    params: &ModelParams,
    epsilon: f64,
    seeds: u64,
    master_seed: u64,
    runner: &T,
) -> Result<Vec<ScalingRow>> {
    sizes
        .iter()
        .map(|&n| {
            let g = family.at(n)?.build()?;
            scaling_instance(&g, params, epsilon, seeds, master_seed, runner)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::Sequential;
    use super::*;

    #[test]
    fn already_converged_gives_zero_ratio() {
        let rows = convergence_scaling_experiment(
            ScalingFamily::Cycle,
            &[8, 16],
            &ModelParams::node(0.5, 1),
            1e9,
            5,
            0,
            &Sequential,
        )
        .unwrap();
        for r in rows {
            assert_eq!((r.median_t, r.ratio), (0.0, 0.0));
        }
    }

    #[test]
    fn family_sizes() {
        assert_eq!(ScalingFamily::Hypercube.at(8).unwrap(), Family::Hypercube { dim: 3 });
        assert!(ScalingFamily::Hypercube.at(6).is_err());
        assert_eq!("complete".parse::<ScalingFamily>().unwrap(), ScalingFamily::Complete);
    }
}
