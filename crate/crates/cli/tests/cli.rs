use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_transit-contagion"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small synthetic city in `dir`.
fn city(dir: &Path, persons: usize) {
    let o = run(&["synth", "--persons", &persons.to_string(), "--out", s(dir)]);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn write_config(dir: &Path, city: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        "[paths]\nfeed = \"{}\"\ndemand = \"{}\"\n\n[epidemic]\nruns = 300\nn_seeds = 3\n{extra}",
        s(city),
        s(&city.join("demand.csv"))
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("city");
    city(&c, 300);
    let cfg = write_config(tmp.path(), &c, "");
    let out = tmp.path().join("out");
    let o = run(&["run", "--config", s(&cfg), "--out", s(&out), "--demand", "1.0,0.5", "--capacity", "0.9,0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_object().unwrap();
    assert!(files.contains_key("grid_infection.csv"));
    // Baseline plus four cells.
    assert_eq!(files.keys().filter(|k| k.ends_with("/report.json")).count(), 5);
}

#[test]
fn identical_runs_into_different_directories_match() {
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("city");
    city(&c, 200);
    let cfg = write_config(tmp.path(), &c, "");
    let manifest = |name: &str| {
        let out = tmp.path().join(name);
        let o = run(&["grid", "--config", s(&cfg), "--out", s(&out), "--demand", "0.5", "--capacity", "0.5"]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out.join("manifest.json")).unwrap()
    };
    assert_eq!(manifest("a"), manifest("b"));
}

#[test]
fn missing_demand_file_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("city");
    city(&c, 50);
    let missing = tmp.path().join("nowhere.csv");
    let o = run(&["run", "--feed", s(&c), "--demand-file", s(&missing), "--out", s(&tmp.path().join("out"))]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nowhere.csv"), "{}", stderr(&o));
}

#[test]
fn baseline_only_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("city");
    city(&c, 150);
    let cfg = write_config(tmp.path(), &c, "");
    let out = tmp.path().join("out");
    let o = run(&["grid", "--config", s(&cfg), "--out", s(&out), "--demand", "1.0", "--capacity", "1.0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let scenarios: Vec<_> = std::fs::read_dir(out.join("scenarios")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(scenarios, vec!["d100_c100"]);
}

#[test]
fn validate_reports_bad_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("city");
    city(&c, 50);
    let good = write_config(tmp.path(), &c, "");
    let o = run(&["validate", "--config", s(&good)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let bad = write_config(tmp.path(), &c, "infectious_period = -1\n");
    let o = run(&["validate", "--config", s(&bad)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("epidemic.infectious_period"), "{}", stderr(&o));

    let good = write_config(tmp.path(), &c, "");
    let o = run(&["validate", "--config", s(&good), "--capacity", "0.85"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("capacity mapping"), "{}", stderr(&o));
    let o = run(&["validate", "--config", s(&good), "--capacity", "0.85", "--interpolate-pmax"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn partial_grid_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("city");
    city(&c, 100);
    // 60 seeds fit the full city but not a tenth of it.
    let cfg = write_config(tmp.path(), &c, "");
    let out = tmp.path().join("out");
    let o = run(&[
        "grid", "--config", s(&cfg), "--out", s(&out), "--demand", "1.0,0.1", "--capacity", "1.0", "--n-seeds", "60",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("d10_c100"), "{}", stderr(&o));
    assert!(out.join("scenarios/d100_c100/report.json").exists());
}

#[test]
fn stepwise_commands_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("city");
    city(&c, 150);
    let cfg = write_config(tmp.path(), &c, "");
    let out = tmp.path().join("out");
    for cmd in ["ingest", "assign", "build-net", "simulate", "report"] {
        let o = run(&[cmd, "--config", s(&cfg), "--out", s(&out)]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    for f in ["feed_summary.json", "trajectories.csv", "contact_edges.csv", "infection_estimates.csv", "route_risk.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}
