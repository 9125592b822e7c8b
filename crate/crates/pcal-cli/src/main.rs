//! Command-line front end for the pressure-calculus experiment harness.
//!
//! Exit codes: 0 on success, 1 when a run's own bounds fail or a golden
//! comparison mismatches, 2 on configuration or I/O errors. `PCAL_THREADS`
//! caps the worker count of parallel sweeps.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pcal_core::lp::DyadicProfile;
use pcal_core::{compare_dirs, describe_field, run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "pcal", version, about = "Pressure estimate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a flat key-value config file.
    Run {
        /// Path to the config file (dotted keys, one `key = value` per line).
        config: PathBuf,
    },
    /// Compare a run directory against a golden directory.
    Compare {
        /// Directory produced by `pcal run`.
        run: PathBuf,
        /// Reference directory to compare against.
        golden: PathBuf,
    },
    /// Print the dyadic cutoff profile as CSV.
    ProfileDump,
    /// Print the header and summary statistics of a stored field file.
    FieldDump {
        /// Path to a `.pcal` field file.
        file: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config } => run(&config),
        Command::Compare { run, golden } => compare(&run, &golden),
        Command::ProfileDump => profile_dump(),
        Command::FieldDump { file } => field_dump(&file),
    }
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("pcal: {msg}");
    ExitCode::from(2)
}

fn run(config: &PathBuf) -> ExitCode {
    let cfg = match ExperimentConfig::from_file(config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let summary = match run_experiment(&cfg) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    match fs::read_to_string(cfg.output_dir.join("summary.txt")) {
        Ok(text) => print!("{text}"),
        Err(e) => return fail(format!("summary.txt: {e}")),
    }
    if summary.acceptable() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn compare(run: &PathBuf, golden: &PathBuf) -> ExitCode {
    let outcome = match compare_dirs(run, golden) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    for w in &outcome.warnings {
        println!("warning: {w}");
    }
    if outcome.matched {
        println!("directories match");
        ExitCode::SUCCESS
    } else {
        for f in &outcome.failures {
            println!("failure: {f}");
        }
        ExitCode::from(1)
    }
}

fn profile_dump() -> ExitCode {
    let profile = DyadicProfile;
    println!("t,low,band");
    // Step 1/96 resolves the [1, 7/6] transition with 16 interior samples.
    for i in 0..=240 {
        let t = i as f64 / 96.0;
        println!("{t:.16e},{:.16e},{:.16e}", profile.low(t), profile.band(t));
    }
    ExitCode::SUCCESS
}

fn field_dump(file: &PathBuf) -> ExitCode {
    let (header, stats) = match describe_field(file) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    println!("version: {}", header.version);
    println!("dim: {}", header.dim);
    println!("points_per_axis: {}", header.points_per_axis);
    println!("length: {:.16e}", header.length);
    println!("samples: {}", header.samples());
    println!("min: {:.16e}", stats.min);
    println!("max: {:.16e}", stats.max);
    println!("l2: {:.16e}", stats.l2);
    println!("mean: {:.16e}", stats.mean);
    ExitCode::SUCCESS
}
