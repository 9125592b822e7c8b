//! End-to-end runs through the experiment harness: artifact layout, golden
//! comparison, and determinism of repeated runs.

use std::fs;
use std::path::PathBuf;

use pcal_core::{compare_dirs, run_experiment, Error, ExperimentConfig};

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("pcal-harness-{}-{name}", std::process::id()));
    p
}

fn clean(dir: &PathBuf) {
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn run_writes_artifacts_and_self_compares() {
    let golden = tmp("tg-golden");
    let rerun = tmp("tg-rerun");
    clean(&golden);
    clean(&rerun);

    let cfg = ExperimentConfig::parse(&format!(
        "experiment = taylor_green\ngrid.n = 64\noutput_dir = {}\n",
        golden.display()
    ))
    .unwrap();
    let summary = run_experiment(&cfg).unwrap();
    assert!(summary.passed);
    for name in ["config.echo", "rows.csv", "report.json", "summary.txt"] {
        assert!(golden.join(name).is_file(), "missing artifact {name}");
    }
    let csv = fs::read_to_string(golden.join("rows.csv")).unwrap();
    assert!(csv.starts_with("experiment,params,lhs,rhs,ratio,fitted_constant,status"));

    // A second run against the first as golden must compare clean, even
    // though the golden directory carries its own verdict files.
    let cfg2 = ExperimentConfig::parse(&format!(
        "experiment = taylor_green\ngrid.n = 64\noutput_dir = {}\ngolden = {}\n",
        rerun.display(),
        golden.display()
    ))
    .unwrap();
    let second = run_experiment(&cfg2).unwrap();
    let compare = second.compare.as_ref().unwrap();
    assert!(compare.matched, "failures: {:?}", compare.failures);
    assert!(compare.warnings.is_empty(), "warnings: {:?}", compare.warnings);
    assert!(second.acceptable());

    clean(&golden);
    clean(&rerun);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tmp("det-a");
    let b = tmp("det-b");
    clean(&a);
    clean(&b);
    for dir in [&a, &b] {
        let cfg = ExperimentConfig::parse(&format!(
            "experiment = formula_equivalence\ngrid.n = 64\nseeds = 3\noutput_dir = {}\n",
            dir.display()
        ))
        .unwrap();
        run_experiment(&cfg).unwrap();
    }
    assert_eq!(
        fs::read(a.join("rows.csv")).unwrap(),
        fs::read(b.join("rows.csv")).unwrap()
    );
    clean(&a);
    clean(&b);
}

#[test]
fn drifted_constants_and_missing_files_fail_compare() {
    let run = tmp("cmp-run");
    let golden = tmp("cmp-golden");
    clean(&run);
    clean(&golden);

    let cfg = ExperimentConfig::parse(&format!(
        "experiment = taylor_green\ngrid.n = 64\noutput_dir = {}\n",
        run.display()
    ))
    .unwrap();
    run_experiment(&cfg).unwrap();

    // Forge a golden with a drifted fitted constant and one extra binary.
    fs::create_dir_all(&golden).unwrap();
    let csv = fs::read_to_string(run.join("rows.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap().to_string();
    let mut forged = header;
    for line in lines {
        let mut cols: Vec<String> = line.split(',').map(str::to_string).collect();
        let fitted: f64 = cols[5].parse().unwrap();
        cols[5] = format!("{:.16e}", fitted * 3.0 + 1.0);
        forged.push('\n');
        forged.push_str(&cols.join(","));
    }
    forged.push('\n');
    fs::write(golden.join("rows.csv"), forged).unwrap();
    fs::write(golden.join("reference.pcal"), b"PCAL").unwrap();

    let outcome = compare_dirs(&run, &golden).unwrap();
    assert!(!outcome.matched);
    assert!(outcome
        .failures
        .iter()
        .any(|f| f.contains("fitted constant")));
    assert!(outcome
        .failures
        .iter()
        .any(|f| f.contains("reference.pcal")));

    clean(&run);
    clean(&golden);
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let cfg = ExperimentConfig::parse(
        "experiment = not_registered\ngrid.n = 64\noutput_dir = /tmp/unused\n",
    )
    .unwrap();
    match run_experiment(&cfg) {
        Err(Error::Config(msg)) => assert!(msg.contains("not_registered")),
        other => panic!("expected config error, got {other:?}"),
    }
}
