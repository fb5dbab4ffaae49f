//! Variance of the limit value `F` and convergence-time experiments.
//!
//! Trial loops go through a [`TrialRunner`], so the same driver runs
//! sequentially here and on a thread pool in the `avgdyn` crate. Trial `i`
//! always draws from stream `i` of the master seed and results are reduced
//! in trial order, which makes every estimate independent of the runner.

mod scaling;

use alloc::vec::Vec;

use rand::Rng;

use crate::dynamics::{
    run_to_convergence, weighted_mean, EventSampler, ModelKind, ModelParams, RunOptions, SelectionEvent,
    StateVector, apply_event,
};
use crate::graph::Graph;
use crate::qchain::stationary_closed_form;
use crate::stats::Moments;
use crate::{rng, Error, Result};

pub use scaling::{convergence_scaling_experiment, scaling_bound, scaling_instance, ScalingFamily, ScalingRow};

/// Maps trial indices `0..count` to results, returned in index order.
pub trait TrialRunner {
    fn run<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl TrialRunner for Sequential {
    fn run<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}

/// Predicted `Var(F)` for a centred start on a regular graph.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VariancePrediction {
    pub norm_sq: f64,
    /// `sum of xi_u xi_v` over ordered adjacent pairs.
    pub edge_sum: f64,
    /// `(mu0 - mu+) ||xi||^2 + (mu1 - mu+) edge_sum`.
    pub exact_form: f64,
    /// `2 (1-alpha)(d-k) ell ||xi||^2`.
    pub lower_bound: f64,
    /// `2 k (d-1)(1-alpha) ell ||xi||^2`.
    pub upper_bound: f64,
    /// Additive `1/n^5`.
    pub slack: f64,
}

impl VariancePrediction {
    pub fn sandwiched(&self) -> bool {
        self.lower_bound - self.slack <= self.exact_form && self.exact_form <= self.upper_bound + self.slack
    }
}

/// The `k = 1` value `(1-alpha) ||xi||^2 / (n (n alpha + 1 - alpha))`.
pub fn k1_variance(n: usize, alpha: f64, norm_sq: f64) -> f64 {
    let n = n as f64;
    (1.0 - alpha) * norm_sq / (n * (n * alpha + 1.0 - alpha))
}

/// Rejects starts with `|M(0)| > 1e-12 max|xi|`.
pub fn check_centred(xi0: &[f64], g: &Graph) -> Result<()> {
    let (_, m) = weighted_mean(xi0, g);
    let scale = xi0.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m.abs() > 1e-12 * scale {
        return Err(Error::NotCentred(m));
    }
    Ok(())
}

/// Exact form and bounds from the stationary triple.
///
/// The bounds come from `-d ||xi||^2 <= edge_sum <= d ||xi||^2` and
/// `mu1 - mu+ = -(1-alpha)(k-1) ell <= 0`; they coincide at `k = 1`.
pub fn variance_analytic(g: &Graph, xi0: &[f64], k: usize, alpha: f64) -> Result<VariancePrediction> {
    let d = g.regular_degree().ok_or(Error::NotRegular)?;
    if xi0.len() != g.n() {
        return Err(Error::StateLength { expected: g.n(), got: xi0.len() });
    }
    check_centred(xi0, g)?;
    let t = stationary_closed_form(g.n(), d, k, alpha)?;
    let norm_sq: f64 = xi0.iter().map(|x| x * x).sum();
    let edge_sum = g.directed_edge_product_sum(xi0);
    let (df, kf) = (d as f64, k as f64);
    Ok(VariancePrediction {
        norm_sq,
        edge_sum,
        exact_form: (t.mu0 - t.mu_plus) * norm_sq + (t.mu1 - t.mu_plus) * edge_sum,
        lower_bound: 2.0 * (1.0 - alpha) * (df - kf) * t.ell * norm_sq,
        upper_bound: 2.0 * kf * (df - 1.0) * (1.0 - alpha) * t.ell * norm_sq,
        slack: 1.0 / libm::pow(g.n() as f64, 5.0),
    })
}

/// `F` of one run, read as `M(T_eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialOutcome {
    pub f: f64,
    pub t_eps: Option<u64>,
}

pub fn run_variance_trial<R: Rng + ?Sized>(
    g: &Graph,
    xi0: &[f64],
    params: &ModelParams,
    epsilon: f64,
    max_steps: u64,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let opts = RunOptions { epsilon, max_steps, trace_stride: None };
    let r = run_to_convergence(&StateVector::new(xi0.to_vec()), g, params, &opts, rng)?;
    Ok(TrialOutcome { f: r.final_m, t_eps: r.t_eps })
}

/// Default `epsilon`: the predicted variance over `10^4`.
pub fn default_variance_epsilon(predicted: f64) -> f64 {
    if predicted > 0.0 {
        predicted / 1e4
    } else {
        f64::MIN_POSITIVE
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonteCarloEstimate {
    pub trials: u64,
    pub mean_f: f64,
    pub var_f: f64,
    pub std_error_of_mean: f64,
    pub std_error_of_var: f64,
    pub seed: u64,
    /// Trials that hit `max_steps`; their `F` is `M` at the cut-off.
    pub unconverged: u64,
}

impl MonteCarloEstimate {
    pub fn from_outcomes(outcomes: &[TrialOutcome], seed: u64) -> Self {
        let values: Vec<f64> = outcomes.iter().map(|o| o.f).collect();
        let m = Moments::pairwise(&values);
        MonteCarloEstimate {
            trials: m.count,
            mean_f: m.mean,
            var_f: m.variance(),
            std_error_of_mean: m.std_error_of_mean(),
            std_error_of_var: m.std_error_of_variance(),
            seed,
            unconverged: outcomes.iter().filter(|o| o.t_eps.is_none()).count() as u64,
        }
    }
}

/// `trials` independent runs to `epsilon`; trial `i` uses stream `i` of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn variance_monte_carlo<T: TrialRunner>(
    g: &Graph,
    xi0: &[f64],
    params: &ModelParams,
    trials: u64,
    epsilon: f64,
    max_steps: u64,
    seed: u64,
    runner: &T,
) -> Result<(MonteCarloEstimate, Vec<TrialOutcome>)> {
    if trials < 2 {
        return Err(Error::TooFewTrials { min: 2, got: trials as usize });
    }
    check_centred(xi0, g)?;
    params.validate(g)?;
    let outcomes: Result<Vec<_>> = runner
        .run(trials, |i| run_variance_trial(g, xi0, params, epsilon, max_steps, &mut rng::stream(seed, i)))
        .into_iter()
        .collect();
    let outcomes = outcomes?;
    Ok((MonteCarloEstimate::from_outcomes(&outcomes, seed), outcomes))
}

/// Standard deviation of the sample variance over `resamples` bootstrap draws.
pub fn bootstrap_variance_se<R: Rng + ?Sized>(values: &[f64], resamples: usize, rng: &mut R) -> f64 {
    let mut draw = Vec::with_capacity(values.len());
    let vars: Vec<f64> = (0..resamples)
        .map(|_| {
            draw.clear();
            draw.extend((0..values.len()).map(|_| values[rng.random_range(0..values.len())]));
            Moments::pairwise(&draw).variance()
        })
        .collect();
    libm::sqrt(Moments::pairwise(&vars).variance())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeBounds {
    /// `t (d_max / 2m * K)^2`.
    pub bound_m: f64,
    /// Edge Model only: `t K^2 / n^2`.
    pub bound_avg: Option<f64>,
}

/// Bounds on `Var(M(t))` and, for the Edge Model, `Var(Avg(t))`, where `K`
/// is the initial discrepancy.
pub fn variance_time_bounds(g: &Graph, kind: ModelKind, t: u64, discrepancy: f64) -> TimeBounds {
    let t = t as f64;
    let w = g.max_degree() as f64 / (2 * g.m()) as f64 * discrepancy;
    let n = g.n() as f64;
    TimeBounds {
        bound_m: t * w * w,
        bound_avg: (kind == ModelKind::Edge).then(|| t * discrepancy * discrepancy / (n * n)),
    }
}

/// `(M(t), Avg(t))` at each of the increasing `times` along one trajectory.
pub fn trajectory_samples<R: Rng + ?Sized>(
    g: &Graph,
    xi0: &[f64],
    params: &ModelParams,
    times: &[u64],
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    let mut sampler = EventSampler::new(g, *params)?;
    let mut x = xi0.to_vec();
    let mut ev = SelectionEvent::default();
    let mut t = 0u64;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if target < t {
            return Err(Error::InvalidParams("sample times must be non-decreasing"));
        }
        while t < target {
            sampler.sample_into(rng, &mut ev);
            apply_event(&mut x, &ev, params.alpha);
            t += 1;
        }
        let (avg, m) = weighted_mean(&x, g);
        out.push((m, avg));
    }
    Ok(out)
}

/// Moments of `M(t)` and `Avg(t)` across trials at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsemblePoint {
    pub t: u64,
    pub m: Moments,
    pub avg: Moments,
}

pub fn trajectory_ensemble<T: TrialRunner>(
    g: &Graph,
    xi0: &[f64],
    params: &ModelParams,
    times: &[u64],
    trials: u64,
    seed: u64,
    runner: &T,
) -> Result<Vec<EnsemblePoint>> {
    let per_trial: Result<Vec<_>> = runner
        .run(trials, |i| trajectory_samples(g, xi0, params, times, &mut rng::stream(seed, i)))
        .into_iter()
        .collect();
    let per_trial = per_trial?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let ms: Vec<f64> = per_trial.iter().map(|s| s[j].0).collect();
            let avgs: Vec<f64> = per_trial.iter().map(|s| s[j].1).collect();
            EnsemblePoint { t, m: Moments::pairwise(&ms), avg: Moments::pairwise(&avgs) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Family;

    #[test]
    fn k4_alternating_prediction() {
        let g = Family::Complete { n: 4 }.build().unwrap();
        let p = variance_analytic(&g, &[1.0, -1.0, 1.0, -1.0], 1, 0.5).unwrap();
        assert!((p.exact_form - 0.2).abs() < 1e-15);
        assert!((k1_variance(4, 0.5, 4.0) - 0.2).abs() < 1e-15);
        assert_eq!(p.lower_bound, p.upper_bound);
        assert!(p.sandwiched());
    }

    #[test]
    fn zero_start_predicts_zero() {
        let g = Family::Cycle { n: 6 }.build().unwrap();
        let p = variance_analytic(&g, &[0.0; 6], 2, 0.3).unwrap();
        assert_eq!((p.exact_form, p.lower_bound, p.upper_bound), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rejects_uncentred_and_irregular() {
        let g = Family::Cycle { n: 4 }.build().unwrap();
        assert!(matches!(variance_analytic(&g, &[1.0, 0.0, 0.0, 0.0], 1, 0.5), Err(Error::NotCentred(_))));
        let p = Family::Path { n: 3 }.build().unwrap();
        assert_eq!(variance_analytic(&p, &[1.0, 0.0, -1.0], 1, 0.5), Err(Error::NotRegular));
    }

    #[test]
    fn time_bound_values() {
        let c4 = Family::Cycle { n: 4 }.build().unwrap();
        let b = variance_time_bounds(&c4, ModelKind::Edge, 100, 2.0);
        assert_eq!(b.bound_avg, Some(25.0));
        assert_eq!(b.bound_m, 100.0 * (2.0f64 / 4.0).powi(2));
        let z = variance_time_bounds(&c4, ModelKind::Node, 0, 2.0);
        assert_eq!((z.bound_m, z.bound_avg), (0.0, None));
    }

    #[test]
    fn zero_start_gives_zero_variance() {
        let g = Family::Complete { n: 4 }.build().unwrap();
        let (est, outcomes) =
            variance_monte_carlo(&g, &[0.0; 4], &ModelParams::node(0.5, 1), 10, 1e-6, 100, 1, &Sequential).unwrap();
        assert_eq!(est.var_f, 0.0);
        assert!(outcomes.iter().all(|o| o.t_eps == Some(0)));
        assert!(variance_monte_carlo(&g, &[0.0; 4], &ModelParams::node(0.5, 1), 1, 1e-6, 100, 1, &Sequential).is_err());
    }

    #[test]
    fn bootstrap_agrees_with_moment_formula() {
        let mut r = rng::stream(2, 0);
        let values: Vec<f64> = (0..4000).map(|_| r.random::<f64>() - 0.5).collect();
        let m = Moments::pairwise(&values);
        let boot = bootstrap_variance_se(&values, 300, &mut rng::stream(2, 1));
        let ratio = boot / m.std_error_of_variance();
        assert!((0.8..1.25).contains(&ratio), "{ratio}");
    }
}
