//! Executes a [`RunConfig`] and writes its outputs and manifest.

use std::path::Path;

use avgdyn_core::analysis::{
    bootstrap_variance_se, convergence_scaling_experiment, default_variance_epsilon, trajectory_ensemble,
    variance_analytic, variance_monte_carlo, variance_time_bounds,
};
use avgdyn_core::dynamics::{
    default_max_steps, discrepancy, run_to_convergence, EventSampler, RunOptions, StateVector,
};
use avgdyn_core::graph::spectral;
use avgdyn_core::qchain::{default_burn_in, expected_class_mass, simulate_pair_occupancy, stationary_closed_form};
use avgdyn_core::{rng, Graph};
use serde_json::json;

use crate::config::{Command, Criterion, Experiment, Format, Manifest, RunConfig, Suite, STREAM_RULE};
use crate::io::{self, Table};
use crate::parallel::Parallel;
use crate::verify;
use crate::{Error, Status};

/// Default `epsilon` for `simulate` when none is configured.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Acceptance tolerance for statistical checks, in standard errors.
pub const Z_TOLERANCE: f64 = 3.0;

/// Largest allowed `max ratio / min ratio` across sizes in a scaling run.
pub const SCALING_BAND: f64 = 4.0;

pub struct Outcome {
    pub status: Status,
    pub manifest: Manifest,
    /// One human-readable line per criterion.
    pub lines: Vec<String>,
}

pub fn execute(cfg: &RunConfig, workers: usize) -> Result<Outcome, Error> {
    let loaded = cfg.graph.load()?;
    let g = &loaded.graph;
    cfg.model.validate(g)?;
    let runner = Parallel::new(workers);
    let mut outputs = Vec::new();
    let mut tolerances = json!({});
    let (results, criteria) = match &cfg.command {
        Command::Simulate { trace_stride, record_events } => {
            simulate(cfg, g, *trace_stride, *record_events, &mut outputs)?
        }
        Command::Verify { suite, count } => {
            tolerances = json!({ "exact": 1e-12, "class_spread": 1e-10 });
            verify_cmd(cfg, g, *suite, *count, &mut outputs)?
        }
        Command::Experiment(e) => {
            tolerances = json!({ "z": Z_TOLERANCE, "scaling_band": SCALING_BAND });
            experiment(cfg, g, e, &runner, &mut outputs)?
        }
    };
    let status = if criteria.iter().all(|c| c.pass) {
        Status::Ok
    } else if matches!(cfg.command, Command::Simulate { .. }) {
        Status::NonConvergence
    } else {
        Status::AcceptanceFailure
    };
    let lines = criteria
        .iter()
        .map(|c| format!("[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail))
        .collect();
    let manifest = Manifest {
        config: cfg.clone(),
        graph: cfg.graph.to_string(),
        master_seed: cfg.seed,
        stream_rule: STREAM_RULE.into(),
        tolerances,
        results,
        criteria,
        outputs: outputs.clone(),
    };
    io::write_json(&cfg.out.join("manifest.json"), &manifest)?;
    Ok(Outcome { status, manifest, lines })
}

fn emit_table(out: &Path, stem: &str, format: Format, table: &Table, outputs: &mut Vec<String>) -> Result<String, Error> {
    let name = match format {
        Format::Csv => format!("{stem}.csv"),
        Format::Json => format!("{stem}.json"),
    };
    match format {
        Format::Csv => io::write(&out.join(&name), table.to_csv())?,
        Format::Json => io::write_json(&out.join(&name), &table.to_json())?,
    }
    outputs.push(name.clone());
    Ok(name)
}

type Produced = (serde_json::Value, Vec<Criterion>);

fn simulate(cfg: &RunConfig, g: &Graph, stride: u64, record: bool, outputs: &mut Vec<String>) -> Result<Produced, Error> {
    let xi0 = cfg.initial_values(g)?;
    let epsilon = cfg.epsilon.unwrap_or(DEFAULT_EPSILON);
    let max_steps = match cfg.max_steps {
        Some(m) => m,
        None => default_max_steps(g, &spectral(g)?, cfg.model.kind, &xi0, epsilon),
    };
    let opts = RunOptions { epsilon, max_steps, trace_stride: Some(stride.max(1)) };
    let start = StateVector::new(xi0.clone());
    let result = run_to_convergence(&start, g, &cfg.model, &opts, &mut rng::stream(cfg.seed, 0))?;

    let trace = match cfg.format {
        Format::Csv => {
            io::write(&cfg.out.join("trace.csv"), io::trace_csv(&result.trace))?;
            "trace.csv"
        }
        Format::Json => {
            io::write_json(&cfg.out.join("trace.json"), &result.trace)?;
            "trace.json"
        }
    };
    outputs.push(trace.into());
    let summary = io::RunSummary::from(&result);
    io::write_json(&cfg.out.join("result.json"), &summary)?;
    outputs.push("result.json".into());

    let mut criteria = vec![Criterion {
        name: "converged".into(),
        pass: result.converged(),
        detail: match result.t_eps {
            Some(t) => format!("T_eps = {t}, M = {:?}", result.final_m),
            None => format!("phi = {:?} after {} steps", result.final_phi, result.steps),
        },
    }];
    if record {
        // The run drew only events from its stream, so redrawing reproduces them.
        let mut sampler = EventSampler::new(g, cfg.model)?;
        let mut r = rng::stream(cfg.seed, 0);
        let events: Vec<_> = (0..result.steps).map(|_| sampler.sample(&mut r)).collect();
        let log = avgdyn_core::duality::EventLog { params: cfg.model, events };
        let replay = avgdyn_core::duality::replay_forward(&xi0, &log);
        criteria.push(Criterion {
            name: "event log replays the run".into(),
            pass: replay == result.final_state.values,
            detail: format!("{} events", log.len()),
        });
        io::write(&cfg.out.join("events.jsonl"), io::events_jsonl(&log.events))?;
        outputs.push("events.jsonl".into());
    }
    Ok((serde_json::to_value(&summary).expect("serialisable"), criteria))
}

fn verify_cmd(cfg: &RunConfig, g: &Graph, suite: Suite, count: u64, outputs: &mut Vec<String>) -> Result<Produced, Error> {
    let report = match suite {
        Suite::Duality => verify::duality_suite(g, &cfg.model, count, cfg.seed)?,
        Suite::Qchain => {
            let (report, mu) = verify::qchain_suite(g, &cfg.model)?;
            io::write(&cfg.out.join("mu.csv"), io::mu_csv(g.n(), verify::distance_fn(g), &mu))?;
            outputs.push("mu.csv".into());
            report
        }
        Suite::Martingale => verify::martingale_suite(g, &cfg.model, count, cfg.seed)?,
        Suite::PotentialDrop => verify::potential_drop_suite(g, &cfg.model, count, cfg.seed)?,
        Suite::EdgeIdentity => verify::edge_identity_suite(g, cfg.model.alpha, count, cfg.seed)?,
    };
    io::write_json(&cfg.out.join("report.json"), &report)?;
    outputs.push("report.json".into());
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    let criteria = vec![Criterion {
        name: format!("{suite:?} suite"),
        pass: report.pass,
        detail: format!("{} checks, {failed} failed, max residual {:e}", report.checks.len(), report.max_residual),
    }];
    Ok((serde_json::to_value(&report).expect("serialisable"), criteria))
}

fn experiment(
    cfg: &RunConfig,
    g: &Graph,
    e: &Experiment,
    runner: &Parallel,
    outputs: &mut Vec<String>,
) -> Result<Produced, Error> {
    if let Experiment::Occupancy { samples, burn_in } = e {
        return occupancy(cfg, g, *samples, *burn_in, outputs);
    }
    if cfg.trials < 2 {
        return Err(avgdyn_core::Error::TooFewTrials { min: 2, got: cfg.trials as usize }.into());
    }
    match e {
        Experiment::Occupancy { .. } => unreachable!("handled above"),
        Experiment::Variance { bootstrap } => variance(cfg, g, *bootstrap, runner, outputs),
        Experiment::Scaling { family, sizes } => {
            let epsilon = cfg.epsilon.unwrap_or(1e-4);
            let rows = convergence_scaling_experiment(*family, sizes, &cfg.model, epsilon, cfg.trials, cfg.seed, runner)?;
            let cols = ["family", "n", "m", "lambda2", "norm_sq", "median_T", "bound", "ratio", "unconverged"];
            let mut t = Table::new(&cols);
            for r in &rows {
                t.push(vec![
                    family.to_string().into(),
                    r.n.into(),
                    r.m.into(),
                    r.lambda2.into(),
                    r.norm_sq.into(),
                    r.median_t.into(),
                    r.bound.into(),
                    r.ratio.into(),
                    r.unconverged.into(),
                ]);
            }
            let name = emit_table(&cfg.out, "scaling", cfg.format, &t, outputs)?;
            if cfg.format == Format::Csv {
                io::write(&cfg.out.join("scaling.gp"), io::gnuplot_script(&name, &cols, "n", &["median_T", "bound"], true))?;
                outputs.push("scaling.gp".into());
            }
            let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
            let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
            let spread = if lo > 0.0 { hi / lo } else if hi == 0.0 { 1.0 } else { f64::INFINITY };
            let unconverged: u64 = rows.iter().map(|r| r.unconverged).sum();
            let criteria = vec![
                Criterion {
                    name: "ratio band".into(),
                    pass: spread <= SCALING_BAND,
                    detail: format!("ratios {ratios:?}, spread {spread:.3} <= {SCALING_BAND}"),
                },
                Criterion { name: "all runs converged".into(), pass: unconverged == 0, detail: format!("{unconverged} capped") },
            ];
            Ok((t.to_json(), criteria))
        }
        Experiment::TimeBounds { times } => {
            let xi0 = cfg.initial_values(g)?;
            let k_disc = discrepancy(&xi0);
            let points = trajectory_ensemble(g, &xi0, &cfg.model, times, cfg.trials, cfg.seed, runner)?;
            let cols = ["t", "var_M", "se_var_M", "bound_M", "var_Avg", "se_var_Avg", "bound_Avg"];
            let mut t = Table::new(&cols);
            let mut criteria = Vec::new();
            let mut prev: Option<(f64, f64)> = None;
            let mut monotone = true;
            let mut within = true;
            for p in &points {
                let b = variance_time_bounds(g, cfg.model.kind, p.t, k_disc);
                let (vm, sm) = (p.m.variance(), p.m.std_error_of_variance());
                let (va, sa) = (p.avg.variance(), p.avg.std_error_of_variance());
                within &= vm <= b.bound_m + Z_TOLERANCE * sm;
                if let Some(ba) = b.bound_avg {
                    within &= va <= ba + Z_TOLERANCE * sa;
                    if let Some((pv, ps)) = prev {
                        monotone &= va >= pv - Z_TOLERANCE * (ps * ps + sa * sa).sqrt();
                    }
                    prev = Some((va, sa));
                }
                t.push(vec![
                    p.t.into(),
                    vm.into(),
                    sm.into(),
                    b.bound_m.into(),
                    va.into(),
                    sa.into(),
                    b.bound_avg.unwrap_or(f64::NAN).into(),
                ]);
            }
            emit_table(&cfg.out, "time_bounds", cfg.format, &t, outputs)?;
            criteria.push(Criterion { name: "variance under time bounds".into(), pass: within, detail: format!("K = {k_disc:?}") });
            if cfg.model.kind == avgdyn_core::dynamics::ModelKind::Edge {
                criteria.push(Criterion { name: "Var(Avg(t)) non-decreasing".into(), pass: monotone, detail: String::new() });
            }
            Ok((t.to_json(), criteria))
        }
    }
}

fn variance(cfg: &RunConfig, g: &Graph, bootstrap: Option<usize>, runner: &Parallel, outputs: &mut Vec<String>) -> Result<Produced, Error> {
    let xi0 = cfg.initial_values(g)?;
    let pred = variance_analytic(g, &xi0, cfg.model.k, cfg.model.alpha)?;
    let epsilon = cfg.epsilon.unwrap_or_else(|| default_variance_epsilon(pred.exact_form));
    let max_steps = match cfg.max_steps {
        Some(m) => m,
        None => default_max_steps(g, &spectral(g)?, cfg.model.kind, &xi0, epsilon),
    };
    let (est, outcomes) = variance_monte_carlo(g, &xi0, &cfg.model, cfg.trials, epsilon, max_steps, cfg.seed, runner)?;
    let boot = bootstrap.map(|b| {
        let values: Vec<f64> = outcomes.iter().map(|o| o.f).collect();
        bootstrap_variance_se(&values, b, &mut rng::stream(cfg.seed, u64::MAX))
    });
    let z_var = (est.var_f - pred.exact_form) / est.std_error_of_var;
    let z_mean = if est.std_error_of_mean > 0.0 { est.mean_f / est.std_error_of_mean } else { 0.0 };
    let cols = [
        "graph", "n", "k", "alpha", "trials", "epsilon", "exact_form", "lower_bound", "upper_bound", "mean_F", "var_F",
        "se_var", "se_mean", "z_var", "unconverged", "bootstrap_se",
    ];
    let mut t = Table::new(&cols);
    t.push(vec![
        cfg.graph.to_string().into(),
        g.n().into(),
        cfg.model.k.into(),
        cfg.model.alpha.into(),
        est.trials.into(),
        epsilon.into(),
        pred.exact_form.into(),
        pred.lower_bound.into(),
        pred.upper_bound.into(),
        est.mean_f.into(),
        est.var_f.into(),
        est.std_error_of_var.into(),
        est.std_error_of_mean.into(),
        z_var.into(),
        est.unconverged.into(),
        boot.unwrap_or(f64::NAN).into(),
    ]);
    emit_table(&cfg.out, "variance", cfg.format, &t, outputs)?;
    let exact_zero = pred.exact_form == 0.0 && est.var_f == 0.0;
    let criteria = vec![
        Criterion {
            name: "Var(F) matches prediction".into(),
            pass: exact_zero || z_var.abs() <= Z_TOLERANCE,
            detail: format!("var_F = {:.6}, exact = {:.6}, SE = {:.2e}, z = {z_var:.2}", est.var_f, pred.exact_form, est.std_error_of_var),
        },
        Criterion {
            name: "mean F is zero".into(),
            pass: z_mean.abs() <= Z_TOLERANCE,
            detail: format!("mean_F = {:.3e}, z = {z_mean:.2}", est.mean_f),
        },
        Criterion { name: "all runs converged".into(), pass: est.unconverged == 0, detail: format!("{} capped", est.unconverged) },
    ];
    let results = json!({ "prediction": pred, "estimate": est, "bootstrap_se": boot, "max_steps": max_steps });
    Ok((results, criteria))
}

fn occupancy(cfg: &RunConfig, g: &Graph, samples: u64, burn_in: Option<u64>, outputs: &mut Vec<String>) -> Result<Produced, Error> {
    let d = g.regular_degree().ok_or(avgdyn_core::Error::NotRegular)?;
    let triple = stationary_closed_form(g.n(), d, cfg.model.k, cfg.model.alpha)?;
    let expected = expected_class_mass(&triple);
    let burn_in = burn_in.unwrap_or_else(|| default_burn_in(g.n()));
    let occ = simulate_pair_occupancy(g, cfg.model.k, cfg.model.alpha, (0, 0), burn_in, samples, &mut rng::stream(cfg.seed, 0))?;
    let mut t = Table::new(&["class", "expected", "frequency", "se", "z"]);
    let mut worst = 0.0f64;
    for (i, name) in ["S0", "S1", "S+"].into_iter().enumerate() {
        let diff = occ.frequency[i] - expected[i];
        // An empty class has zero spread; only an exact match passes.
        let z = match (diff, occ.std_error[i]) {
            (d, _) if d.abs() < 1e-15 => 0.0,
            (_, 0.0) => f64::INFINITY,
            (d, se) => d / se,
        };
        worst = worst.max(z.abs());
        t.push(vec![
            name.into(),
            expected[i].into(),
            occ.frequency[i].into(),
            occ.std_error[i].into(),
            z.into(),
        ]);
    }
    emit_table(&cfg.out, "occupancy", cfg.format, &t, outputs)?;
    let criteria = vec![Criterion {
        name: "occupancy matches stationary mass".into(),
        pass: worst <= Z_TOLERANCE,
        detail: format!("expected {expected:?}, observed {:?}, max |z| {worst:.2}", occ.frequency),
    }];
    Ok((json!({ "burn_in": burn_in, "samples": samples, "expected": expected, "frequency": occ.frequency, "std_error": occ.std_error }), criteria))
}
