use std::path::Path;
use std::process::{Command, Output};

use surface17_ion::{build_lookup_tables, GateKind, TimedCircuit};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surface17"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const SMALL: &str = "seed = 9\n[estimator]\nsamples_per_subset = 500\nweight_cutoff = 1e-4\n";

#[test]
fn decode_tables_match_the_library() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["decode-tables"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(tmp.path(), "lookup_table.txt"), build_lookup_tables().to_canonical_text());
    assert!(!read(tmp.path(), "matching_table.txt").is_empty());
}

#[test]
fn equilibrium_chain_has_seventeen_ions() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run(tmp.path(), &["equilibrium"]).status.success());
    let xs: Vec<f64> = read(tmp.path(), "positions.csv")
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(xs.len(), 17);
    let mean = (xs[16] - xs[0]) / 16.0;
    assert!((mean - 8.2).abs() < 0.2, "mean spacing {mean}");
    assert!(read(tmp.path(), "scan.csv").lines().count() > 10);
    let axes: serde_json::Value = serde_json::from_str(&read(tmp.path(), "scan.axes.json")).unwrap();
    assert_eq!(axes["x"], "gamma4");
    assert_eq!(axes["manifest"], "manifest.json");
}

#[test]
fn schedule_of_mt() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run(tmp.path(), &["schedule", "--layout", "mt"]).status.success());
    let csv = read(tmp.path(), "schedule.csv");
    assert!(csv.contains("\nShuttle,7e2,7e2\n"), "{csv}");
    assert!(csv.contains("\nMeasure,3e2,3e2\n"), "{csv}");
    let dump = TimedCircuit::parse_dump(&read(tmp.path(), "circuit.txt")).unwrap();
    assert_eq!(dump.count_gates(|k| matches!(k, GateKind::Xx(_))), 24);
}

#[test]
fn layout_files_are_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("anneal.toml");
    std::fs::write(&cfg, "seed = 3\n[anneal]\nproposals = 2000\nrestarts = 2\n").unwrap();
    let a = tmp.path().join("a");
    assert!(run(&a, &["layout-anneal", "--config", cfg.to_str().unwrap()]).status.success());
    let s = tmp.path().join("s");
    let layout = a.join("best_layout.txt");
    let out = run(&s, &["schedule", "--layout", layout.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\n[noise]\np_xxx = 0.1\n").unwrap();
    let out = run(tmp.path(), &["schedule", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    // stochastic experiments refuse to run without a seed
    assert_eq!(run(tmp.path(), &["subset-table"]).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["schedule", "--layout", "XY"]).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["subset-table", "--seed", "1", "--p-xx", "2"]).status.code(), Some(2));
}

#[test]
fn outputs_are_reproducible_and_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let cfg = cfg.to_str().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(dir, &["subset-table", "--config", cfg, "--workers", "2"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(&a, "subsets.csv"), read(&b, "subsets.csv"));

    let manifest: serde_json::Value = serde_json::from_str(&read(&a, "manifest.json")).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["layout"], "MA");
    let listed = &manifest["outputs"][0];
    assert_eq!(listed["path"], "subsets.csv");
    assert_eq!(listed["sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["results"]["p_L"].as_f64().unwrap() > 0.0);
}
