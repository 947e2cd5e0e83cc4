//! End-to-end smoke tests for the command line interface.

use std::fs;
use std::process::{Command, Output};

use aggtree::topology::TreeNetwork;

fn demo_interchange() -> String {
    let parents = vec![None, Some(0), Some(0), Some(1), Some(1), Some(2), Some(2)];
    let rates = vec![1.0; 7];
    let loads = vec![0, 0, 0, 5, 5, 2, 6];
    TreeNetwork::build(&parents, &rates, &loads, &(0..7).collect())
        .unwrap()
        .to_interchange()
}

fn aggtree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aggtree"))
        .args(args)
        .output()
        .expect("binary must run")
}

#[test]
fn solve_reports_the_optimum_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let network = dir.path().join("net.txt");
    fs::write(&network, demo_interchange()).unwrap();
    let placement = dir.path().join("placement.txt");
    let report = dir.path().join("report.csv");

    let output = aggtree(&[
        "solve",
        "--network",
        network.to_str().unwrap(),
        "--k",
        "2",
        "--emit-placement",
        placement.to_str().unwrap(),
        "--emit-report",
        report.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("network congestion: 5.0"), "stdout: {stdout}");

    let placement_text = fs::read_to_string(&placement).unwrap();
    let blues: Vec<&str> = placement_text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .collect();
    assert_eq!(blues.len(), 2);

    let report_text = fs::read_to_string(&report).unwrap();
    assert!(report_text.lines().count() > 7, "report: {report_text}");
}

#[test]
fn place_supports_the_named_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let network = dir.path().join("net.txt");
    fs::write(&network, demo_interchange()).unwrap();

    for (strategy, expected) in
        [("top", "8.0"), ("max", "9.0"), ("level", "6.0"), ("allred", "18.0")]
    {
        let output = aggtree(&[
            "place",
            "--network",
            network.to_str().unwrap(),
            "--k",
            "2",
            "--strategy",
            strategy,
        ]);
        assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
        let stdout = String::from_utf8_lossy(&output.stdout);
        assert!(
            stdout.contains(&format!("network congestion: {expected}")),
            "{strategy}: {stdout}"
        );
    }
}

#[test]
fn multirun_writes_per_step_rows() {
    let dir = tempfile::tempdir().unwrap();
    let network = dir.path().join("net.txt");
    fs::write(&network, demo_interchange()).unwrap();
    let out = dir.path().join("run.csv");

    let output = aggtree(&[
        "multirun",
        "--network",
        network.to_str().unwrap(),
        "--workloads",
        "4",
        "--k",
        "2",
        "--capacity",
        "2",
        "--strategy",
        "smc",
        "--seed",
        "7",
        "--emit",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let rows = fs::read_to_string(&out).unwrap();
    assert_eq!(rows.lines().count(), 5, "header plus one row per workload: {rows}");
    assert!(rows.starts_with("t,strategy,step_psi"), "{rows}");
}

#[test]
fn experiment_runs_from_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("experiment.toml");
    let results = dir.path().join("results.csv");
    fs::write(
        &config,
        format!(
            r#"
[network]
kind = "complete-binary"
leaves = 8

[rates]
scheme = "constant"

[loads]
kinds = ["uniform"]

[solver]
k = [2]
strategies = ["smc", "top", "allred"]
repetitions = 2
seed = 11

[output]
path = {:?}
"#,
            results.to_str().unwrap()
        ),
    )
    .unwrap();

    let output = aggtree(&["experiment", "--config", config.to_str().unwrap()]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let rows = fs::read_to_string(&results).unwrap();
    assert_eq!(rows.lines().count(), 7, "header plus 2 reps x 3 strategies: {rows}");
    assert!(results.with_extension("summary.csv").exists());
}
