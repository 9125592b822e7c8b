//! Black-box tests of the `pcal` binary: exit codes and output shapes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pcal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcal"))
        .args(args)
        .output()
        .expect("spawn pcal")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_exits_zero_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        &format!(
            "experiment = taylor_green\ngrid.n = 64\noutput_dir = {}\n",
            out_dir.display()
        ),
    );
    let out = pcal(&["run", &cfg]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("taylor_green"));
    for name in ["config.echo", "rows.csv", "report.json", "summary.txt"] {
        assert!(out_dir.join(name).is_file(), "missing {name}");
    }
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "experiment = taylor_green\ngrid.n = 64\nbogus.key = 1\noutput_dir = /tmp/x\n",
    );
    assert_eq!(code(&pcal(&["run", &cfg])), 2);
    assert_eq!(code(&pcal(&["run", "/no/such/config"])), 2);
}

#[test]
fn failed_acceptance_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    // At this resolution the two moment routes disagree beyond their bound,
    // so the run completes but does not accept.
    let cfg = write_config(
        tmp.path(),
        &format!(
            "experiment = l1_failure\ngrid.n = 128\noutput_dir = {}\n",
            out_dir.display()
        ),
    );
    let out = pcal(&["run", &cfg]);
    assert_eq!(code(&out), 1, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("rows.csv").is_file());
}

#[test]
fn compare_reports_match_and_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        &format!(
            "experiment = taylor_green\ngrid.n = 64\noutput_dir = {}\n",
            out_dir.display()
        ),
    );
    assert_eq!(code(&pcal(&["run", &cfg])), 0);
    let out_str = out_dir.to_string_lossy().into_owned();

    let ok = pcal(&["compare", &out_str, &out_str]);
    assert_eq!(code(&ok), 0);
    assert!(String::from_utf8_lossy(&ok.stdout).contains("directories match"));

    let golden = tmp.path().join("golden");
    fs::create_dir_all(&golden).unwrap();
    let tampered = fs::read_to_string(out_dir.join("rows.csv"))
        .unwrap()
        .replace("taylor_green,", "taylor_green_x,");
    fs::write(golden.join("rows.csv"), tampered).unwrap();
    let bad = pcal(&["compare", &out_str, &golden.to_string_lossy()]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stdout).contains("failure:"));

    assert_eq!(code(&pcal(&["compare", &out_str, "/no/such/dir"])), 2);
}

#[test]
fn profile_and_field_dumps() {
    let profile = pcal(&["profile-dump"]);
    assert_eq!(code(&profile), 0);
    let text = String::from_utf8_lossy(&profile.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,low,band"));
    // low == 1 below the plateau edge, 0 beyond the transition.
    let first = lines.next().unwrap();
    assert!(first.starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
    assert!(text.lines().last().unwrap().contains(",0.0000000000000000e0,"));

    let tmp = tempfile::tempdir().unwrap();
    let field_path = tmp.path().join("f.pcal");
    let grid = pcal_core::Grid::standard(2, 16).unwrap();
    let f = pcal_core::RealField::from_fn(&grid, |x| x[0].sin());
    pcal_core::write_field(&field_path, &f).unwrap();
    let dump = pcal(&["field-dump", &field_path.to_string_lossy()]);
    assert_eq!(code(&dump), 0);
    let text = String::from_utf8_lossy(&dump.stdout);
    assert!(text.contains("dim: 2"));
    assert!(text.contains("points_per_axis: 16"));
    assert!(text.contains("samples: 256"));

    fs::write(tmp.path().join("junk.pcal"), b"PCALxxxx").unwrap();
    let junk = pcal(&["field-dump", &tmp.path().join("junk.pcal").to_string_lossy()]);
    assert_eq!(code(&junk), 2);
}
