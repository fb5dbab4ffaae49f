//! Text formats: edge lists, initial values, traces, event logs, tables.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! number read back from any of these files is bit-identical to the value
//! that was written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use avgdyn_core::duality::EventLog;
use avgdyn_core::dynamics::{RunResult, SelectionEvent, TraceRow};
use avgdyn_core::graph::{spectral, LoadedGraph};
use avgdyn_core::Graph;
use serde::{Deserialize, Serialize};

use crate::Error;

pub fn read_to_string(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_owned(), source })?;
    }
    fs::write(path, contents).map_err(|source| Error::Io { path: path.to_owned(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable value");
    text.push('\n');
    write(path, text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Error> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format { path: path.to_owned(), message: e.to_string() })
}

pub fn load_graph_file(path: &Path) -> Result<LoadedGraph, Error> {
    Ok(avgdyn_core::graph::parse_edge_list(&read_to_string(path)?)?)
}

/// Whitespace-separated reals; `#` starts a comment.
pub fn parse_values(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body.split_whitespace() {
            out.push(tok.parse::<f64>().map_err(|_| format!("line {}: `{tok}` is not a number", i + 1))?);
        }
    }
    Ok(out)
}

/// The JSON graph summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n: usize,
    pub m: usize,
    pub regular: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d: Option<usize>,
    /// Degree to node count; present for irregular graphs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub degree_histogram: Option<BTreeMap<usize, usize>>,
    #[serde(rename = "lambda2_P")]
    pub lambda2_p: f64,
    #[serde(rename = "lambda2_L")]
    pub lambda2_l: f64,
    /// External node labels in internal order, when ingestion relabeled.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub labels: Option<Vec<u64>>,
}

impl GraphSummary {
    pub fn new(g: &Graph, labels: Option<&[u64]>) -> Result<Self, Error> {
        let s = spectral(g)?;
        let d = g.regular_degree();
        let degree_histogram = d.is_none().then(|| {
            let mut h = BTreeMap::new();
            g.degrees().for_each(|x| *h.entry(x).or_insert(0) += 1);
            h
        });
        Ok(GraphSummary {
            n: g.n(),
            m: g.m(),
            regular: d.is_some(),
            d,
            degree_histogram,
            lambda2_p: s.lambda2_p,
            lambda2_l: s.lambda2_l,
            labels: labels.map(<[u64]>::to_vec),
        })
    }
}

pub const TRACE_HEADER: &str = "step,updater,phi,M,Avg";

/// Trace CSV; the updater column is empty on the step-0 row.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in rows {
        let updater = r.updater.map(|u| u.to_string()).unwrap_or_default();
        writeln!(s, "{},{},{:?},{:?},{:?}", r.step, updater, r.phi, r.m, r.avg).unwrap();
    }
    s
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_HEADER) {
        return Err(format!("trace must start with `{TRACE_HEADER}`"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || format!("trace line {}: `{line}`", i + 2);
            if f.len() != 5 {
                return Err(bad());
            }
            Ok(TraceRow {
                step: f[0].parse().map_err(|_| bad())?,
                updater: if f[1].is_empty() { None } else { Some(f[1].parse().map_err(|_| bad())?) },
                phi: f[2].parse().map_err(|_| bad())?,
                m: f[3].parse().map_err(|_| bad())?,
                avg: f[4].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// `RunResult` without the trace, as written to `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub converged: bool,
    pub t_eps: Option<u64>,
    pub steps: u64,
    pub final_m: f64,
    pub final_avg: f64,
    pub final_phi: f64,
    pub max_drift: f64,
    pub final_state: Vec<f64>,
}

impl From<&RunResult> for RunSummary {
    fn from(r: &RunResult) -> Self {
        RunSummary {
            converged: r.converged(),
            t_eps: r.t_eps,
            steps: r.steps,
            final_m: r.final_m,
            final_avg: r.final_avg,
            final_phi: r.final_phi,
            max_drift: r.max_drift,
            final_state: r.final_state.values.clone(),
        }
    }
}

/// One line of an event log file; `t` counts from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLine {
    pub t: u64,
    pub u: usize,
    pub sources: Vec<usize>,
    pub noop: bool,
}

pub fn events_jsonl(events: &[SelectionEvent]) -> String {
    let mut s = String::new();
    for (i, ev) in events.iter().enumerate() {
        let line = EventLine { t: i as u64 + 1, u: ev.updater, sources: ev.sources.clone(), noop: ev.noop };
        s.push_str(&serde_json::to_string(&line).expect("serialisable event"));
        s.push('\n');
    }
    s
}

/// Reads events back; `t` must run 1, 2, 3, ... Blank lines are skipped.
pub fn parse_events_jsonl(text: &str) -> Result<Vec<SelectionEvent>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let e: EventLine = serde_json::from_str(line).map_err(|err| format!("event line {}: {err}", i + 1))?;
        if e.t != out.len() as u64 + 1 {
            return Err(format!("event line {}: expected t = {}, found {}", i + 1, out.len() + 1, e.t));
        }
        out.push(SelectionEvent { updater: e.u, sources: e.sources, noop: e.noop });
    }
    Ok(out)
}

pub fn log_from_jsonl(text: &str, params: avgdyn_core::dynamics::ModelParams) -> Result<EventLog, String> {
    Ok(EventLog { params, events: parse_events_jsonl(text)? })
}

pub const MU_HEADER: &str = "x,y,dis,mu";

/// Stationary vector over ordered pairs; `dis` is the BFS distance.
pub fn mu_csv(n: usize, dist: impl Fn(usize, usize) -> usize, mu: &[f64]) -> String {
    let mut s = String::from(MU_HEADER);
    s.push('\n');
    for x in 0..n {
        for y in 0..n {
            writeln!(s, "{x},{y},{},{:?}", dist(x, y), mu[x * n + y]).unwrap();
        }
    }
    s
}

/// A table with a fixed header, written as CSV or as a JSON array of objects.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Real(f64),
    Text(String),
    Bool(bool),
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i128)
    }
}
impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i128)
    }
}
impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}
impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_owned())
    }
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(x) => x.to_string(),
                    Cell::Real(x) => format!("{x:?}"),
                    Cell::Text(x) => x.clone(),
                    Cell::Bool(x) => x.to_string(),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(k, c)| {
                        let v = match c {
                            Cell::Int(x) => serde_json::json!(*x as i64),
                            Cell::Real(x) => serde_json::json!(x),
                            Cell::Text(x) => serde_json::json!(x),
                            Cell::Bool(x) => serde_json::json!(x),
                        };
                        (k.to_string(), v)
                    })
                    .collect::<serde_json::Map<_, _>>();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

/// A gnuplot script plotting `y` against `x` from a CSV written by [`Table::to_csv`].
pub fn gnuplot_script(csv_name: &str, columns: &[&str], x: &str, ys: &[&str], logscale: bool) -> String {
    let col = |name: &str| columns.iter().position(|c| *c == name).map(|i| i + 1).unwrap_or(1);
    let mut s = String::new();
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set key autotitle columnhead").unwrap();
    writeln!(s, "set xlabel '{x}'").unwrap();
    if logscale {
        writeln!(s, "set logscale xy").unwrap();
    }
    let plots: Vec<String> = ys
        .iter()
        .map(|y| format!("'{csv_name}' using {}:{} with linespoints title '{y}'", col(x), col(y)))
        .collect();
    writeln!(s, "plot {}", plots.join(", \\\n     ")).unwrap();
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_with_comments() {
        assert_eq!(parse_values("1 -1 # x\n\n2.5e-3\n").unwrap(), vec![1.0, -1.0, 2.5e-3]);
        assert!(parse_values("1 x").is_err());
    }

    #[test]
    fn trace_round_trip() {
        let rows = vec![
            TraceRow { step: 0, updater: None, phi: 0.1 + 0.2, m: -1e-300, avg: 1.0 / 3.0 },
            TraceRow { step: 5, updater: Some(3), phi: 1e-17, m: 0.0, avg: -0.0 },
        ];
        assert_eq!(parse_trace_csv(&trace_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn events_round_trip_and_order() {
        let evs = vec![
            SelectionEvent::new(1, vec![0, 2]),
            SelectionEvent { updater: 4, sources: vec![3, 5], noop: true },
        ];
        let text = events_jsonl(&evs);
        assert!(text.starts_with("{\"t\":1,\"u\":1,\"sources\":[0,2],\"noop\":false}\n"));
        assert_eq!(parse_events_jsonl(&text).unwrap(), evs);
        assert!(parse_events_jsonl("{\"t\":2,\"u\":1,\"sources\":[0],\"noop\":false}").is_err());
    }

    #[test]
    fn table_formats() {
        let mut t = Table::new(&["n", "ratio", "pass"]);
        t.push(vec![8usize.into(), 0.5.into(), true.into()]);
        assert_eq!(t.to_csv(), "n,ratio,pass\n8,0.5,true\n");
        assert_eq!(t.to_json()[0]["ratio"], 0.5);
    }
}
