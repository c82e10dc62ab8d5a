use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gossip-spread"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn cd_preset_prints_toml() {
    let o = run(&["cd-preset", "--n", "100", "--alpha", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("d = 2"));
    assert!(text.contains("probes = 1000"));
    assert!(text.contains("kind = \"gossip\""));
}

#[test]
fn cd_preset_config_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(run(&["cd-preset", "--n", "20", "--alpha", "0.5", "--out", d]).status.success());
    let cfg = dir.path().join("config.toml");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--probes", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(summary["islands"].as_u64().unwrap() >= 1);
}

#[test]
fn solve_h_writes_csv_and_passes_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve-h", "--m", "1", "--ds", "0.01", "--out", dir.path().to_str().unwrap(), "--check"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
    let csv = std::fs::read_to_string(dir.path().join("h_1.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with('s'));
    assert!(lines.count() > 2000);
}

#[test]
fn simulate_writes_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--lambda", "200", "--probes", "10", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let log = std::fs::read_to_string(dir.path().join("events.jsonl")).unwrap();
    assert!(log.lines().count() > 0);
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["t"].as_f64().unwrap() >= 0.0);
        assert!(v["disposition"].is_string());
    }
    let probes = std::fs::read_to_string(dir.path().join("probes.csv")).unwrap();
    assert_eq!(probes.lines().next(), Some("probe,tau"));
    assert_eq!(probes.lines().count(), 11);
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn simulate_until_covered_reports_coverage_time() {
    let o = run(&["simulate", "--lambda", "100", "--until-covered"]);
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(summary["coverage_time"].as_f64().unwrap() > 0.0);
}

#[test]
fn check_flag_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.toml");
    std::fs::write(&cfg, "big_lambda = 300.0\nruns = 4\n[tolerances]\npath_median = 0.0\n").unwrap();
    let c = cfg.to_str().unwrap();
    let strict = run(&["path-lln", "--config", c, "--check"]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(stdout(&strict).contains("FAIL"));
    let lenient = run(&["path-lln", "--config", c]);
    assert!(lenient.status.success());
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "alpha = 0.9\n").unwrap();
    let o = run(&["path-lln", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
}

fn experiment_outputs(dir: &Path) {
    let cfg = dir.join("small.toml");
    std::fs::write(&cfg, "big_lambda = 300.0\nruns = 3\nprobes = 20\nseed = 5\nw_pairs = 200\nw_budget = 50.0\n").unwrap();
    let common = ["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    for sub in ["path-lln", "distance", "coverage"] {
        let o = bin().arg(sub).args(common).output().unwrap();
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn outputs_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    experiment_outputs(a.path());
    experiment_outputs(b.path());
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 7);
    // config.toml records the output directory, which differs
    for n in names.iter().filter(|n| *n != "config.toml") {
        assert_eq!(std::fs::read(a.path().join(n)).unwrap(), std::fs::read(b.path().join(n)).unwrap(), "{n:?}");
    }
}
