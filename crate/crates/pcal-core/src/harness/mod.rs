//! Experiment harness: flat-file configuration, a registry of named
//! experiments, deterministic sweep execution, and machine-readable run
//! artifacts with golden-directory comparison.
//!
//! A run directory contains `config.echo` (normalized config, reparses to
//! the same run), `rows.csv` (fixed column order, floats at 17 significant
//! digits), `report.json` (rows plus named constants and the pass verdict),
//! `summary.txt`, and for the inflation constructions `inflation.json` and
//! a two-column `plot.dat` of (level, ratio). Identical config and seed
//! produce byte-identical artifacts.

mod experiments;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// One row of a sweep. `params` is a `;`-joined list of `key=value` pairs
/// (never containing commas), so the CSV stays trivially splittable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub params: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub fitted_constant: f64,
    pub status: RowStatus,
}

/// `Flagged` marks rows where a precondition warning fired (mean removal,
/// truncation residue, relaxed scale separation), not rows that fail an
/// acceptance bound; bounds decide the run verdict instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Flagged,
}

impl RowStatus {
    fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Flagged => "flagged",
        }
    }
}

/// Everything a run produced, mirrored into `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub experiment: String,
    pub rows: Vec<ReportRow>,
    /// Named scalars (fitted slopes, oracle values, defects) for golden use.
    pub constants: BTreeMap<String, f64>,
    /// Experiment-specific hard bounds all held.
    pub passed: bool,
    pub notes: Vec<String>,
    /// Present when the config named a golden directory.
    pub compare: Option<CompareOutcome>,
}

impl RunSummary {
    /// The run is acceptable iff its own bounds held and, when a golden
    /// directory was given, the comparison matched.
    pub fn acceptable(&self) -> bool {
        self.passed && self.compare.as_ref().map_or(true, |c| c.matched)
    }
}

/// Result of comparing a run directory against a golden directory.
#[derive(Debug, Clone, Serialize)]
pub struct CompareOutcome {
    pub matched: bool,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

/// Parsed flat key-value experiment configuration.
///
/// Recognized keys: `experiment`, `grid.dim`, `grid.n`, `grid.length`,
/// `seed`, `seeds`, `sweep.s`, `sweep.q`, `sweep.r`, `sweep.alpha`,
/// `sweep.j`, `scales`, `annulus.lo`, `annulus.hi`, `kmod`, `cutoff`,
/// `output_dir`, `golden`. List values are comma separated; `inf` is a valid
/// float. Unknown or duplicate keys are configuration errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub seed: u64,
    pub seeds: Option<usize>,
    pub sweep_s: Option<Vec<f64>>,
    pub sweep_q: Option<Vec<f64>>,
    pub sweep_r: Option<Vec<f64>>,
    pub sweep_alpha: Option<Vec<f64>>,
    pub sweep_j: Option<Vec<usize>>,
    pub scales: Option<Vec<f64>>,
    pub annulus: Option<[f64; 2]>,
    pub kmod: Option<f64>,
    pub cutoff: Option<f64>,
    pub output_dir: PathBuf,
    pub golden: Option<PathBuf>,
}

fn parse_scalar<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("key {key}: cannot parse value {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    // An empty value is an empty sweep, which runs as a header-only CSV.
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|t| parse_scalar(key, t.trim()))
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.insert(key, value).is_some() {
                return Err(Error::Config(format!("duplicate key {key}")));
            }
        }

        let mut cfg = ExperimentConfig {
            experiment: String::new(),
            dim: 2,
            n: 0,
            length: std::f64::consts::TAU,
            seed: 7,
            seeds: None,
            sweep_s: None,
            sweep_q: None,
            sweep_r: None,
            sweep_alpha: None,
            sweep_j: None,
            scales: None,
            annulus: None,
            kmod: None,
            cutoff: None,
            output_dir: PathBuf::new(),
            golden: None,
        };
        let mut annulus_lo = None;
        let mut annulus_hi = None;
        for (key, value) in seen {
            match key {
                "experiment" => cfg.experiment = value.to_string(),
                "grid.dim" => cfg.dim = parse_scalar(key, value)?,
                "grid.n" => cfg.n = parse_scalar(key, value)?,
                "grid.length" => cfg.length = parse_scalar(key, value)?,
                "seed" => cfg.seed = parse_scalar(key, value)?,
                "seeds" => cfg.seeds = Some(parse_scalar(key, value)?),
                "sweep.s" => cfg.sweep_s = Some(parse_list(key, value)?),
                "sweep.q" => cfg.sweep_q = Some(parse_list(key, value)?),
                "sweep.r" => cfg.sweep_r = Some(parse_list(key, value)?),
                "sweep.alpha" => cfg.sweep_alpha = Some(parse_list(key, value)?),
                "sweep.j" => {
                    cfg.sweep_j = Some(if value.is_empty() {
                        Vec::new()
                    } else {
                        value
                            .split(',')
                            .map(|t| parse_scalar(key, t.trim()))
                            .collect::<Result<_>>()?
                    })
                }
                "scales" => cfg.scales = Some(parse_list(key, value)?),
                "annulus.lo" => annulus_lo = Some(parse_scalar(key, value)?),
                "annulus.hi" => annulus_hi = Some(parse_scalar(key, value)?),
                "kmod" => cfg.kmod = Some(parse_scalar(key, value)?),
                "cutoff" => cfg.cutoff = Some(parse_scalar(key, value)?),
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "golden" => cfg.golden = Some(PathBuf::from(value)),
                other => {
                    return Err(Error::Config(format!("unknown config key {other}")));
                }
            }
        }
        match (annulus_lo, annulus_hi) {
            (Some(lo), Some(hi)) => cfg.annulus = Some([lo, hi]),
            (None, None) => {}
            _ => {
                return Err(Error::Config(
                    "annulus.lo and annulus.hi must be given together".into(),
                ))
            }
        }
        if cfg.experiment.is_empty() {
            return Err(Error::Config("missing key experiment".into()));
        }
        if cfg.n == 0 {
            return Err(Error::Config("missing key grid.n".into()));
        }
        if cfg.output_dir.as_os_str().is_empty() {
            return Err(Error::Config("missing key output_dir".into()));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Normalized config text; parsing it reproduces this config exactly.
    pub fn echo(&self) -> String {
        fn fl(x: f64) -> String {
            format!("{x:.16e}")
        }
        fn flist(xs: &[f64]) -> String {
            xs.iter().map(|&x| fl(x)).collect::<Vec<_>>().join(",")
        }
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        if let Some([lo, hi]) = self.annulus {
            put("annulus.hi", fl(hi));
            put("annulus.lo", fl(lo));
        }
        if let Some(c) = self.cutoff {
            put("cutoff", fl(c));
        }
        put("experiment", self.experiment.clone());
        if let Some(g) = &self.golden {
            put("golden", g.display().to_string());
        }
        put("grid.dim", self.dim.to_string());
        put("grid.length", fl(self.length));
        put("grid.n", self.n.to_string());
        if let Some(k) = self.kmod {
            put("kmod", fl(k));
        }
        put("output_dir", self.output_dir.display().to_string());
        if let Some(s) = &self.scales {
            put("scales", flist(s));
        }
        put("seed", self.seed.to_string());
        if let Some(s) = self.seeds {
            put("seeds", s.to_string());
        }
        if let Some(v) = &self.sweep_alpha {
            put("sweep.alpha", flist(v));
        }
        if let Some(v) = &self.sweep_j {
            put(
                "sweep.j",
                v.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(","),
            );
        }
        if let Some(v) = &self.sweep_q {
            put("sweep.q", flist(v));
        }
        if let Some(v) = &self.sweep_r {
            put("sweep.r", flist(v));
        }
        if let Some(v) = &self.sweep_s {
            put("sweep.s", flist(v));
        }
        out
    }
}

/// Worker cap for sweep execution: `PCAL_THREADS` when set (minimum 1),
/// otherwise the machine's available parallelism.
pub fn thread_budget() -> usize {
    match std::env::var("PCAL_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_or(1, |t| t.max(1)),
        Err(_) => std::thread::available_parallelism().map_or(1, |p| p.get()),
    }
}

/// Splitmix-style per-row seed: decorrelates rows while keeping each one a
/// pure function of (master seed, row index).
pub(crate) fn row_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Order-preserving parallel map over row inputs, capped by
/// [`thread_budget`]. Outputs land at their input index, so results are
/// independent of scheduling.
pub(crate) fn indexed_map<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let workers = thread_budget().min(count.max(1));
    if workers <= 1 || count <= 1 {
        return (0..count).map(&f).collect();
    }
    let mut slots: Vec<Option<Result<T>>> = (0..count).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slot_ptr = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let out = f(i);
                let mut guard = slot_ptr.lock().unwrap();
                guard[i] = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("worker filled every slot"))
        .collect()
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn rows_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("experiment,params,lhs,rhs,ratio,fitted_constant,status\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.experiment,
            r.params,
            fmt_float(r.lhs),
            fmt_float(r.rhs),
            fmt_float(r.ratio),
            fmt_float(r.fitted_constant),
            r.status.as_str()
        );
    }
    out
}

fn summary_text(s: &RunSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "experiment: {}", s.experiment);
    let _ = writeln!(out, "rows: {}", s.rows.len());
    for (k, v) in &s.constants {
        let _ = writeln!(out, "constant {k} = {}", fmt_float(*v));
    }
    for n in &s.notes {
        let _ = writeln!(out, "note: {n}");
    }
    let _ = writeln!(out, "verdict: {}", if s.passed { "pass" } else { "FAIL" });
    if let Some(c) = &s.compare {
        let _ = writeln!(
            out,
            "golden comparison: {}",
            if c.matched { "match" } else { "MISMATCH" }
        );
        for f in &c.failures {
            let _ = writeln!(out, "golden failure: {f}");
        }
        for w in &c.warnings {
            let _ = writeln!(out, "golden warning: {w}");
        }
    }
    out
}

/// Output of one experiment driver, before artifacts are written.
pub(crate) struct ExpOutput {
    pub rows: Vec<ReportRow>,
    pub constants: BTreeMap<String, f64>,
    pub passed: bool,
    pub notes: Vec<String>,
    /// (level, ratio) series for the constructions; written to `plot.dat`.
    pub plot: Option<Vec<(f64, f64)>>,
    /// Raw construction report, written to `inflation.json`.
    pub inflation: Option<crate::counterexamples::InflationReport>,
}

/// Runs a registered experiment and writes its artifacts into
/// `config.output_dir`. Compute errors inside a sweep surface as
/// configuration or numeric errors here only when the whole experiment is
/// unusable; per-row troubles downgrade to flagged rows and notes.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    let driver = experiments::dispatch(&config.experiment).ok_or_else(|| {
        Error::Config(format!(
            "unknown experiment {:?}; registered: {}",
            config.experiment,
            experiments::NAMES.join(", ")
        ))
    })?;
    let grid = crate::grid::Grid::new(config.dim, config.n, config.length)?;
    let out = driver(config, &grid)?;

    fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::Io(format!("{}: {e}", config.output_dir.display())))?;
    let write = |name: &str, text: &str| -> Result<()> {
        fs::write(config.output_dir.join(name), text)
            .map_err(|e| Error::Io(format!("{name}: {e}")))
    };
    write("config.echo", &config.echo())?;
    write("rows.csv", &rows_csv(&out.rows))?;
    if let Some(plot) = &out.plot {
        let mut text = String::new();
        for (j, ratio) in plot {
            let _ = writeln!(text, "{} {}", fmt_float(*j), fmt_float(*ratio));
        }
        write("plot.dat", &text)?;
    }
    if let Some(report) = &out.inflation {
        let json = serde_json::to_string_pretty(report)
            .map_err(|e| Error::Format(e.to_string()))?;
        write("inflation.json", &json)?;
    }

    let mut summary = RunSummary {
        experiment: config.experiment.clone(),
        rows: out.rows,
        constants: out.constants,
        passed: out.passed,
        notes: out.notes,
        compare: None,
    };
    if let Some(golden) = &config.golden {
        summary.compare = Some(compare_dirs(&config.output_dir, golden)?);
    }
    let json =
        serde_json::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))?;
    write("report.json", &json)?;
    write("summary.txt", &summary_text(&summary))?;
    Ok(summary)
}

fn parse_rows_csv(text: &str) -> Result<Vec<(String, f64)>> {
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(Error::Format(format!(
                "rows.csv line has {} columns, expected 7",
                cols.len()
            )));
        }
        let key = format!("{}[{}]", cols[0], cols[1]);
        let fitted: f64 = cols[5]
            .parse()
            .map_err(|_| Error::Format(format!("bad fitted constant {:?}", cols[5])))?;
        rows.push((key, fitted));
    }
    Ok(rows)
}

/// Compares a run directory against a golden directory.
///
/// Fitted constants from `rows.csv` must agree within 25% row by row;
/// binary field files (`.pcal`) must match bit for bit; a file present in
/// the golden directory but absent from the run is a structural failure,
/// while extra files in the run only warn. `config.echo`, `report.json`
/// and `summary.txt` carry verdicts and echo text rather than measured
/// values, so they are not diffed.
pub fn compare_dirs(run_dir: &Path, golden_dir: &Path) -> Result<CompareOutcome> {
    let mut failures = Vec::new();
    let mut warnings = Vec::new();

    // Verdict and echo files; never measured values, and the comparison runs
    // before the current run has written its own verdicts.
    const METADATA: [&str; 3] = ["config.echo", "report.json", "summary.txt"];
    let list = |dir: &Path| -> Result<Vec<String>> {
        let mut names = Vec::new();
        for entry in
            fs::read_dir(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
        {
            let entry = entry.map_err(|e| Error::Io(e.to_string()))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if entry.path().is_file() && !METADATA.contains(&name.as_str()) {
                names.push(name);
            }
        }
        names.sort();
        Ok(names)
    };
    let golden_files = list(golden_dir)?;
    let run_files = list(run_dir)?;

    for name in &golden_files {
        if !run_files.contains(name) {
            failures.push(format!("missing counterpart file {name}"));
        }
    }
    for name in &run_files {
        if !golden_files.contains(name) {
            warnings.push(format!("extra file {name} in run directory"));
        }
    }

    if golden_files.contains(&"rows.csv".to_string())
        && run_files.contains(&"rows.csv".to_string())
    {
        let golden_rows = parse_rows_csv(
            &fs::read_to_string(golden_dir.join("rows.csv"))
                .map_err(|e| Error::Io(e.to_string()))?,
        )?;
        let run_rows = parse_rows_csv(
            &fs::read_to_string(run_dir.join("rows.csv"))
                .map_err(|e| Error::Io(e.to_string()))?,
        )?;
        let run_map: BTreeMap<&str, f64> =
            run_rows.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        for (key, golden_fit) in &golden_rows {
            match run_map.get(key.as_str()) {
                None => failures.push(format!("missing row {key}")),
                Some(&run_fit) => {
                    let ok = if !golden_fit.is_finite() || !run_fit.is_finite() {
                        // NaN or infinite constants only match themselves.
                        golden_fit.to_bits() == run_fit.to_bits()
                    } else if golden_fit.abs() <= 1e-14 {
                        run_fit.abs() <= 1e-14
                    } else {
                        ((run_fit - golden_fit) / golden_fit.abs()).abs() <= 0.25
                    };
                    if !ok {
                        failures.push(format!(
                            "{key}: fitted constant {run_fit:.6e} outside 25% of golden {golden_fit:.6e}"
                        ));
                    }
                }
            }
        }
    }

    for name in &golden_files {
        if name.ends_with(".pcal") && run_files.contains(name) {
            let a = fs::read(golden_dir.join(name)).map_err(|e| Error::Io(e.to_string()))?;
            let b = fs::read(run_dir.join(name)).map_err(|e| Error::Io(e.to_string()))?;
            if a != b {
                failures.push(format!("{name}: binary field differs from golden"));
            }
        }
    }

    Ok(CompareOutcome {
        matched: failures.is_empty(),
        failures,
        warnings,
    })
}

/// Registered experiment names, for CLI help and diagnostics.
pub fn experiment_names() -> &'static [&'static str] {
    experiments::NAMES
}
