//! Exact verification suites.

use avgdyn_core::duality::{diffuse_backward, duality_check, EventLog};
use avgdyn_core::dynamics::{
    exact_one_step_expectation, potential_drop_factor, ModelKind, ModelParams,
};
use avgdyn_core::graph::{spectral, DistanceClasses};
use avgdyn_core::qchain::{solve_stationary_numeric, verify_stationary, QMatrix};
use avgdyn_core::{rng, Graph};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Suite;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, pass: value <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub max_residual: f64,
    pub pass: bool,
    /// Suite-specific values such as the stationary triple.
    pub extra: serde_json::Value,
}

impl VerifyReport {
    fn new(suite: Suite, checks: Vec<Check>, extra: serde_json::Value) -> Self {
        let max_residual = checks.iter().map(|c| c.value).fold(0.0, f64::max);
        let pass = checks.iter().all(|c| c.pass);
        VerifyReport { suite, checks, max_residual, pass, extra }
    }
}

/// Uniform values in `[-1, 1)` from stream `index` of `seed`.
pub fn random_state(n: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, index);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Duality on `count` sampled logs of length 1 to 64.
pub fn duality_suite(g: &Graph, params: &ModelParams, count: u64, seed: u64) -> Result<VerifyReport, Error> {
    let mut checks = Vec::new();
    for i in 0..count {
        let mut r = rng::stream(seed, i);
        let len = r.random_range(1..=64);
        let log = EventLog::sample(g, *params, len, &mut r)?;
        let xi0: Vec<f64> = (0..g.n()).map(|_| r.random_range(-10.0..10.0)).collect();
        let diff = duality_check(&xi0, &log);
        let (_, state) = diffuse_backward(&xi0, &log);
        let mass = state.column_sums().iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        checks.push(Check::at_most(format!("log {i}: |W - xi(T)|"), diff, 1e-12 * max_abs(&xi0).max(1.0)));
        checks.push(Check::at_most(format!("log {i}: column mass"), mass, 1e-12));
    }
    Ok(VerifyReport::new(Suite::Duality, checks, serde_json::Value::Null))
}

pub fn qchain_suite(g: &Graph, params: &ModelParams) -> Result<(VerifyReport, Vec<f64>), Error> {
    let r = verify_stationary(g, params.k, params.alpha)?;
    let q = QMatrix::build(g, params.k, params.alpha)?;
    let mu = solve_stationary_numeric(&q)?;
    let checks = vec![
        Check::at_most("closed form |mu Q - mu|", r.residual, 1e-12),
        Check::at_most("closed form |sum mu - 1|", r.sum_error, 1e-12),
        Check::at_most("mass identity", (r.triple.total_mass() - 1.0).abs(), 1e-12),
        Check::at_most("numeric spread within class", r.class_spread, 1e-10),
        Check::at_most("numeric vs closed form", r.numeric_gap, 1e-10),
        Check::at_most("row sums", r.row_sum_error, 1e-12),
    ];
    let extra = serde_json::to_value(r).expect("serialisable report");
    Ok((VerifyReport::new(Suite::Qchain, checks, extra), mu))
}

pub fn distance_fn(g: &Graph) -> impl Fn(usize, usize) -> usize {
    let d = DistanceClasses::new(g);
    move |x, y| d.distance(x, y)
}

/// `E[M'] = M` (Node Model) or `E[Avg'] = Avg` (Edge Model; also `M` on regular graphs).
pub fn martingale_suite(g: &Graph, params: &ModelParams, count: u64, seed: u64) -> Result<VerifyReport, Error> {
    let mut checks = Vec::new();
    for i in 0..count {
        let x = random_state(g.n(), seed, i);
        let e = exact_one_step_expectation(&x, g, params)?;
        let tol = 1e-12 * max_abs(&x).max(1.0);
        match params.kind {
            ModelKind::Node => checks.push(Check::at_most(format!("state {i}: |E[M'] - M|"), e.e_delta_m.abs(), tol)),
            ModelKind::Edge => {
                checks.push(Check::at_most(format!("state {i}: |E[Avg'] - Avg|"), e.e_delta_avg.abs(), tol));
                if g.is_regular() {
                    checks.push(Check::at_most(format!("state {i}: |E[M'] - M|"), e.e_delta_m.abs(), tol));
                }
            }
        }
    }
    Ok(VerifyReport::new(Suite::Martingale, checks, serde_json::Value::Null))
}

/// `E[phi'] <= factor * phi`; a check value above zero by more than
/// `1e-12 phi` is a violation.
pub fn potential_drop_suite(g: &Graph, params: &ModelParams, count: u64, seed: u64) -> Result<VerifyReport, Error> {
    if params.kind != ModelKind::Node {
        return Err(Error::Invalid("the potential-drop suite is for the node model".into()));
    }
    let s = spectral(g)?;
    let factor = potential_drop_factor(params.alpha, params.k, s.lambda2_p, g.n());
    let mut checks = Vec::new();
    let mut worst_ratio = f64::NEG_INFINITY;
    for i in 0..count {
        let x = random_state(g.n(), seed, i);
        let e = exact_one_step_expectation(&x, g, params)?;
        if e.phi <= 0.0 {
            continue;
        }
        worst_ratio = worst_ratio.max(e.e_phi_next / e.phi);
        let excess = (e.e_phi_next - factor * e.phi) / e.phi;
        checks.push(Check::at_most(format!("state {i}: (E[phi'] - bound)/phi"), excess, 1e-12));
    }
    let extra = serde_json::json!({ "factor": factor, "lambda2_P": s.lambda2_p, "worst_ratio": worst_ratio });
    Ok(VerifyReport::new(Suite::PotentialDrop, checks, extra))
}

/// `E[sum xi'^2] = sum xi^2 - alpha (1-alpha)/m xi^T L xi` for the Edge Model.
pub fn edge_identity_suite(g: &Graph, alpha: f64, count: u64, seed: u64) -> Result<VerifyReport, Error> {
    let params = ModelParams::edge(alpha);
    let mut checks = Vec::new();
    for i in 0..count {
        let x = random_state(g.n(), seed, i);
        let e = exact_one_step_expectation(&x, g, &params)?;
        let want = e.sumsq - alpha * (1.0 - alpha) / g.m() as f64 * g.laplacian_form(&x);
        let tol = 1e-12 * e.sumsq.max(1.0);
        checks.push(Check::at_most(format!("state {i}: identity"), (e.e_sumsq_next - want).abs(), tol));
    }
    Ok(VerifyReport::new(Suite::EdgeIdentity, checks, serde_json::Value::Null))
}
