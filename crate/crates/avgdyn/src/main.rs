use std::path::PathBuf;
use std::process::ExitCode;

use avgdyn::config::{Command, Experiment, Format, GraphSource, InitSpec, Manifest, RunConfig, Suite};
use avgdyn::io::{self, GraphSummary};
use avgdyn::parallel::{resolve_workers, WORKERS_ENV};
use avgdyn::pipeline::execute;
use avgdyn::Error;
use avgdyn_core::analysis::ScalingFamily;
use avgdyn_core::dynamics::{ModelKind, ModelParams};
use avgdyn_core::Family;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Asynchronous averaging on graphs: simulate, verify and run experiments.
#[derive(Parser)]
#[command(name = "avgdyn", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one trajectory to convergence and write its trace.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Record every `N`th step in the trace.
        #[arg(long, default_value_t = 1)]
        trace_stride: u64,
        /// Also write the full event log as `events.jsonl`.
        #[arg(long)]
        record_events: bool,
    },
    /// Run an exact verification suite.
    Verify {
        suite: Suite,
        #[command(flatten)]
        common: Common,
        /// Random logs or states to check.
        #[arg(long, default_value_t = 100)]
        count: u64,
    },
    /// Run a statistical experiment and evaluate its acceptance thresholds.
    Experiment {
        #[command(subcommand)]
        which: ExperimentCmd,
    },
    /// Print a JSON summary of a graph.
    Graph {
        #[command(flatten)]
        source: Source,
    },
    /// Execute the configuration stored in a manifest again.
    Rerun {
        manifest: PathBuf,
        /// Write outputs here instead of the manifest's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Monte Carlo variance of the limit against the exact prediction.
    Variance {
        #[command(flatten)]
        common: Common,
        /// Bootstrap resamples for a second standard error.
        #[arg(long)]
        bootstrap: Option<usize>,
    },
    /// Median convergence time against the bound across sizes.
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "cycle")]
        family: ScalingFamily,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
        sizes: Vec<usize>,
    },
    /// Var(M(t)) and Var(Avg(t)) against their time bounds.
    TimeBounds {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<u64>,
    },
    /// Occupancy of the distance classes by two correlated walks.
    Occupancy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000_000)]
        samples: u64,
        /// Steps discarded first; defaults to 50 n^2.
        #[arg(long)]
        burn_in: Option<u64>,
    },
}

#[derive(Args)]
#[group(multiple = false)]
struct Source {
    /// Edge-list file.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Generator spec such as `cycle:8`, `hypercube:3` or `random-regular:12,4,7`.
    #[arg(long)]
    generate: Option<Family>,
}

impl Source {
    fn resolve(self) -> Option<GraphSource> {
        match (self.graph, self.generate) {
            (Some(p), _) => Some(GraphSource::File(p)),
            (None, f) => f.map(GraphSource::Generate),
        }
    }

    fn require(self) -> Result<GraphSource, Error> {
        self.resolve().ok_or_else(|| Error::Invalid("one of --graph or --generate is required".into()))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Node,
    Edge,
}

#[derive(Args)]
struct Common {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum, default_value = "node")]
    model: Model,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Skip each Node Model step with probability 1/2.
    #[arg(long)]
    lazy: bool,
    #[arg(long, default_value = "plusminus")]
    init: InitSpec,
    /// Shift the initial state so that M(0) = 0.
    #[arg(long)]
    center: bool,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

impl Common {
    fn into_config(self, command: Command) -> Result<(RunConfig, Option<usize>), Error> {
        let model = ModelParams {
            kind: match self.model {
                Model::Node => ModelKind::Node,
                Model::Edge => ModelKind::Edge,
            },
            alpha: self.alpha,
            k: self.k,
            lazy: self.lazy,
        };
        // Scaling builds its own graphs; the smallest one stands in as the source.
        let graph = match (&command, self.source.resolve()) {
            (_, Some(g)) => g,
            (Command::Experiment(Experiment::Scaling { family, sizes }), None) => {
                let n = sizes.iter().copied().min().unwrap_or(0);
                GraphSource::Generate(family.at(n)?)
            }
            (_, None) => return Err(Error::Invalid("one of --graph or --generate is required".into())),
        };
        let cfg = RunConfig {
            command,
            graph,
            model,
            init: self.init,
            center: self.center,
            epsilon: self.epsilon,
            max_steps: self.max_steps,
            trials: self.trials,
            seed: self.seed,
            out: self.out,
            format: self.format,
        };
        Ok((cfg, self.workers))
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    let (cfg, workers) = match cli.command {
        Cmd::Simulate { common, trace_stride, record_events } => {
            common.into_config(Command::Simulate { trace_stride, record_events })?
        }
        Cmd::Verify { suite, common, count } => common.into_config(Command::Verify { suite, count })?,
        Cmd::Experiment { which } => match which {
            ExperimentCmd::Variance { common, bootstrap } => {
                common.into_config(Command::Experiment(Experiment::Variance { bootstrap }))?
            }
            ExperimentCmd::Scaling { common, family, sizes } => {
                common.into_config(Command::Experiment(Experiment::Scaling { family, sizes }))?
            }
            ExperimentCmd::TimeBounds { common, times } => {
                common.into_config(Command::Experiment(Experiment::TimeBounds { times }))?
            }
            ExperimentCmd::Occupancy { common, samples, burn_in } => {
                common.into_config(Command::Experiment(Experiment::Occupancy { samples, burn_in }))?
            }
        },
        Cmd::Graph { source } => {
            let loaded = source.require()?.load()?;
            let labels = (!loaded.is_identity()).then_some(&loaded.labels[..]);
            let summary = GraphSummary::new(&loaded.graph, labels)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("serialisable"));
            return Ok(0);
        }
        Cmd::Rerun { manifest, out, workers } => {
            let m: Manifest = io::read_json(&manifest)?;
            let mut cfg = m.config;
            if let Some(out) = out {
                cfg.out = out;
            }
            (cfg, workers)
        }
    };
    let outcome = execute(&cfg, resolve_workers(workers))?;
    for line in &outcome.lines {
        println!("{line}");
    }
    Ok(outcome.status.exit_code())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
