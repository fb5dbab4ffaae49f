use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn avgdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avgdyn")).args(args).env_remove("AVGDYN_WORKERS").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn simulate_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        let o = avgdyn(&[
            "simulate", "--generate", "cycle:8", "--model", "node", "--alpha", "0.5", "--k", "1", "--epsilon", "1e-6",
            "--seed", "7", "--out", &out_arg(&dir),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read_to_string(dir.join("trace.csv")).unwrap(), fs::read_to_string(dir.join("result.json")).unwrap())
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert!(a.0.starts_with("step,updater,phi,M,Avg\n0,,"));
    assert!(a.1.contains("\"converged\": true"));
}

#[test]
fn constant_state_has_a_single_trace_row() {
    let tmp = tempfile::tempdir().unwrap();
    let o = avgdyn(&["simulate", "--generate", "petersen", "--init", "constant:2.5", "--out", &out_arg(tmp.path())]);
    assert_eq!(code(&o), 0);
    let trace = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2);
    assert!(fs::read_to_string(tmp.path().join("result.json")).unwrap().contains("\"t_eps\": 0"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(tmp.path());
    let o = avgdyn(&["simulate", "--generate", "random-regular:10,4,3", "--k", "5", "--out", &out]);
    assert_eq!(code(&o), 2);
    let o = avgdyn(&["simulate", "--generate", "cycle:16", "--max-steps", "10", "--out", &out]);
    assert_eq!(code(&o), 3);
    let o = avgdyn(&["experiment", "variance", "--generate", "complete:4", "--trials", "0", "--out", &out]);
    assert_eq!(code(&o), 2);
    let o = avgdyn(&["simulate", "--graph", "/nonexistent/graph.txt", "--out", &out]);
    assert_eq!(code(&o), 1);
    let o = avgdyn(&["verify", "no-such-suite", "--generate", "complete:4"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_qchain_reports_the_triple() {
    let tmp = tempfile::tempdir().unwrap();
    let o = avgdyn(&["verify", "qchain", "--generate", "complete:4", "--k", "1", "--alpha", "0.5", "--out", &out_arg(tmp.path())]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    let t = &report["extra"]["triple"];
    for (key, want) in [("mu0", 0.1), ("mu1", 0.05), ("mu_plus", 0.05)] {
        assert!((t[key].as_f64().unwrap() - want).abs() < 1e-15, "{key}");
    }
    let mu = fs::read_to_string(tmp.path().join("mu.csv")).unwrap();
    assert_eq!(mu.lines().next(), Some("x,y,dis,mu"));
    assert_eq!(mu.lines().count(), 17);
}

#[test]
fn verify_edge_martingale_on_a_path() {
    let tmp = tempfile::tempdir().unwrap();
    let o = avgdyn(&["verify", "martingale", "--generate", "path:3", "--model", "edge", "--out", &out_arg(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn graph_file_with_sparse_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("g.txt");
    fs::write(&path, "# square\n10 20\n20 30\n30 40\n40 10\n").unwrap();
    let o = avgdyn(&["graph", "--graph", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let s: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((s["n"].as_u64(), s["m"].as_u64(), s["d"].as_u64()), (Some(4), Some(4), Some(2)));
    assert_eq!(s["labels"], serde_json::json!([10, 20, 30, 40]));
}

#[test]
fn recorded_events_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let o = avgdyn(&[
        "simulate", "--generate", "hypercube:3", "--k", "2", "--lazy", "--record-events", "--out", &out_arg(tmp.path()),
    ]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("[PASS] event log replays the run"), "{stdout}");
    let text = fs::read_to_string(tmp.path().join("events.jsonl")).unwrap();
    let events = avgdyn::io::parse_events_jsonl(&text).unwrap();
    assert!(events.iter().any(|e| e.noop));
}

#[test]
fn rerun_matches_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let o = avgdyn(&[
        "experiment", "variance", "--generate", "cycle:8", "--k", "2", "--trials", "2000", "--seed", "11", "--workers", "4",
        "--out", &out_arg(&first),
    ]);
    assert!(matches!(code(&o), 0 | 4));
    let manifest = first.join("manifest.json");
    for workers in ["1", "3"] {
        let again = tmp.path().join(workers);
        let o = avgdyn(&["rerun", manifest.to_str().unwrap(), "--workers", workers, "--out", &out_arg(&again)]);
        assert!(matches!(code(&o), 0 | 4));
        assert_eq!(fs::read(first.join("variance.csv")).unwrap(), fs::read(again.join("variance.csv")).unwrap());
    }
}
