//! Run configuration, initial-state specs and manifests.
//!
//! A [`RunConfig`] holds everything that determines the numbers a run
//! produces. It is embedded in every manifest, and `avgdyn rerun` executes
//! it again. The worker count is deliberately absent: it never changes results.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use avgdyn_core::analysis::ScalingFamily;
use avgdyn_core::dynamics::{center, eigenvector_initial_state, ModelParams, Operator};
use avgdyn_core::graph::{spectral, LoadedGraph};
use avgdyn_core::{rng, Family, Graph};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{io, Error};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphSource {
    File(PathBuf),
    #[serde(with = "as_string")]
    Generate(Family),
}

impl GraphSource {
    pub fn load(&self) -> Result<LoadedGraph, Error> {
        match self {
            GraphSource::File(path) => io::load_graph_file(path),
            GraphSource::Generate(f) => {
                let graph = f.build()?;
                let labels = (0..graph.n() as u64).collect();
                Ok(LoadedGraph { graph, labels })
            }
        }
    }
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSource::File(p) => write!(f, "file:{}", p.display()),
            GraphSource::Generate(fam) => write!(f, "{fam}"),
        }
    }
}

/// Initial values. Text forms: `file:PATH`, `constant:C`, `eigenvector:P`,
/// `eigenvector:L:SCALE`, `plusminus`, `random-uniform:LO,HI,SEED`,
/// `values:X1,X2,...`. An eigenvector without a scale is scaled by `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    File(PathBuf),
    Constant(f64),
    Eigenvector { op: Operator, scale: Option<f64> },
    /// `+1, -1, +1, ...` by node index.
    PlusMinus,
    RandomUniform { lo: f64, hi: f64, seed: u64 },
    Values(Vec<f64>),
}

impl InitSpec {
    pub fn materialise(&self, g: &Graph) -> Result<Vec<f64>, Error> {
        let n = g.n();
        let values = match self {
            InitSpec::File(path) => io::parse_values(&io::read_to_string(path)?)
                .map_err(|message| Error::Format { path: path.clone(), message })?,
            InitSpec::Constant(c) => vec![*c; n],
            InitSpec::Eigenvector { op, scale } => {
                let s = spectral(g)?;
                eigenvector_initial_state(&s, *op, scale.unwrap_or(n as f64)).values
            }
            InitSpec::PlusMinus => (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(),
            InitSpec::RandomUniform { lo, hi, seed } => {
                if !(lo < hi) {
                    return Err(Error::Invalid(format!("random-uniform needs lo < hi, got {lo} and {hi}")));
                }
                let mut r = rng::stream(*seed, 0);
                (0..n).map(|_| r.random_range(*lo..*hi)).collect()
            }
            InitSpec::Values(v) => v.clone(),
        };
        if values.len() != n {
            return Err(avgdyn_core::Error::StateLength { expected: n, got: values.len() }.into());
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("initial values must be finite".into()));
        }
        Ok(values)
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSpec::File(p) => write!(f, "file:{}", p.display()),
            InitSpec::Constant(c) => write!(f, "constant:{c:?}"),
            InitSpec::Eigenvector { op, scale: None } => write!(f, "eigenvector:{op:?}"),
            InitSpec::Eigenvector { op, scale: Some(s) } => write!(f, "eigenvector:{op:?}:{s:?}"),
            InitSpec::PlusMinus => f.write_str("plusminus"),
            InitSpec::RandomUniform { lo, hi, seed } => write!(f, "random-uniform:{lo:?},{hi:?},{seed}"),
            InitSpec::Values(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "values:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for InitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("unrecognised initial state `{s}`");
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        Ok(match head {
            "file" if !rest.is_empty() => InitSpec::File(rest.into()),
            "constant" => InitSpec::Constant(num(rest)?),
            "plusminus" if rest.is_empty() => InitSpec::PlusMinus,
            "eigenvector" => {
                let (op, scale) = rest.split_once(':').map_or((rest, None), |(o, sc)| (o, Some(sc)));
                let op = match op {
                    "P" | "p" => Operator::P,
                    "L" | "l" => Operator::L,
                    _ => return Err(bad()),
                };
                InitSpec::Eigenvector { op, scale: scale.map(num).transpose()? }
            }
            "random-uniform" => match rest.split(',').collect::<Vec<_>>().as_slice() {
                [lo, hi, seed] => InitSpec::RandomUniform {
                    lo: num(lo)?,
                    hi: num(hi)?,
                    seed: seed.trim().parse().map_err(|_| bad())?,
                },
                _ => return Err(bad()),
            },
            "values" => InitSpec::Values(rest.split(',').map(num).collect::<Result<_, _>>()?),
            _ => return Err(bad()),
        })
    }
}

impl Serialize for InitSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InitSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

mod as_string {
    use std::fmt::Display;
    use std::str::FromStr;

    pub fn serialize<T: Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: serde::Deserializer<'de>,
    {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Duality,
    Qchain,
    Martingale,
    PotentialDrop,
    EdgeIdentity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Experiment {
    Variance { bootstrap: Option<usize> },
    Scaling { family: ScalingFamily, sizes: Vec<usize> },
    TimeBounds { times: Vec<u64> },
    /// Two correlated walks; `burn_in` defaults to `50 n^2`.
    Occupancy { samples: u64, burn_in: Option<u64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    Simulate { trace_stride: u64, record_events: bool },
    Verify { suite: Suite, count: u64 },
    Experiment(Experiment),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    pub graph: GraphSource,
    pub model: ModelParams,
    pub init: InitSpec,
    /// Shift the initial values so that `M(0) = 0`.
    pub center: bool,
    pub epsilon: Option<f64>,
    pub max_steps: Option<u64>,
    pub trials: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
}

impl RunConfig {
    pub fn initial_values(&self, g: &Graph) -> Result<Vec<f64>, Error> {
        let mut v = self.init.materialise(g)?;
        if self.center {
            center(&mut v, g);
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Written next to every output; `avgdyn rerun` reads `config` back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub graph: String,
    pub master_seed: u64,
    /// How per-trial streams derive from the master seed.
    pub stream_rule: String,
    pub tolerances: serde_json::Value,
    pub results: serde_json::Value,
    pub criteria: Vec<Criterion>,
    pub outputs: Vec<String>,
}

pub const STREAM_RULE: &str = "trial i draws from ChaCha8Rng::seed_from_u64(master_seed) with set_stream(i)";
