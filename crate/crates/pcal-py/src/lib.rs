//! Python bindings for the spectral pressure toolkit.
//!
//! The surface is deliberately small: run experiments from config text,
//! compare run directories, inspect field files, and call the two numerical
//! entry points (pressure solve, Besov norm) on flat sample buffers. Samples
//! are row-major over the grid axes with axis 0 slowest, matching the layout
//! `field_dump` prints.

use std::path::Path;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pcal_core::harness::{ReportRow, RowStatus};
use pcal_core::{
    besov_norm as core_besov, compare_dirs, pressure as core_pressure, describe_field as core_describe,
    run_experiment, CompareOutcome, ExperimentConfig, Grid, GridRef, NormSpec, PressureFormula,
    RealField, VectorField,
};

fn value_err(e: pcal_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn grid_for(dim: usize, samples: usize) -> PyResult<GridRef> {
    let n = (samples as f64).powf(1.0 / dim as f64).round() as usize;
    if n.pow(dim as u32) != samples {
        return Err(PyValueError::new_err(format!(
            "sample count {samples} is not a {dim}-dimensional cube"
        )));
    }
    Grid::standard(dim, n).map_err(value_err)
}

fn field_from(grid: &GridRef, samples: &[f64]) -> RealField {
    let mut f = RealField::zeros(grid);
    f.samples_mut().copy_from_slice(samples);
    f
}

fn row_dict<'py>(py: Python<'py>, r: &ReportRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("experiment", &r.experiment)?;
    d.set_item("params", &r.params)?;
    d.set_item("lhs", r.lhs)?;
    d.set_item("rhs", r.rhs)?;
    d.set_item("ratio", r.ratio)?;
    d.set_item("fitted_constant", r.fitted_constant)?;
    d.set_item(
        "status",
        match r.status {
            RowStatus::Ok => "ok",
            RowStatus::Flagged => "flagged",
        },
    )?;
    Ok(d)
}

fn outcome_dict<'py>(py: Python<'py>, c: &CompareOutcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("matched", c.matched)?;
    d.set_item("failures", &c.failures)?;
    d.set_item("warnings", &c.warnings)?;
    Ok(d)
}

/// Registered experiment names, in registry order.
#[pyfunction]
fn experiment_names() -> Vec<String> {
    pcal_core::harness::experiment_names()
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Centered sample coordinates for one axis of a standard grid.
#[pyfunction]
fn axis_coords(points_per_axis: usize) -> PyResult<Vec<f64>> {
    let grid = Grid::standard(1, points_per_axis).map_err(value_err)?;
    Ok((0..points_per_axis).map(|i| grid.coord(i)).collect())
}

/// Run one experiment from config text (same format the CLI accepts) and
/// return the summary as a dict.
#[pyfunction]
fn run_config<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyDict>> {
    let config = ExperimentConfig::parse(text).map_err(value_err)?;
    let summary = run_experiment(&config).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("experiment", &summary.experiment)?;
    d.set_item("passed", summary.passed)?;
    d.set_item("acceptable", summary.acceptable())?;
    d.set_item("notes", &summary.notes)?;
    let constants = PyDict::new(py);
    for (k, v) in &summary.constants {
        constants.set_item(k, *v)?;
    }
    d.set_item("constants", constants)?;
    let rows = summary
        .rows
        .iter()
        .map(|r| row_dict(py, r))
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("rows", rows)?;
    match &summary.compare {
        Some(c) => d.set_item("compare", outcome_dict(py, c)?)?,
        None => d.set_item("compare", py.None())?,
    }
    Ok(d)
}

/// Compare a run directory against a golden directory.
#[pyfunction]
fn compare<'py>(py: Python<'py>, run_dir: &str, golden_dir: &str) -> PyResult<Bound<'py, PyDict>> {
    let outcome =
        compare_dirs(Path::new(run_dir), Path::new(golden_dir)).map_err(value_err)?;
    outcome_dict(py, &outcome)
}

/// Header and summary statistics of a stored field file.
#[pyfunction]
fn describe_field<'py>(py: Python<'py>, path: &str) -> PyResult<Bound<'py, PyDict>> {
    let (header, stats) = core_describe(Path::new(path)).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("version", header.version)?;
    d.set_item("dim", header.dim)?;
    d.set_item("points_per_axis", header.points_per_axis)?;
    d.set_item("length", header.length)?;
    d.set_item("samples", header.samples())?;
    d.set_item("min", stats.min)?;
    d.set_item("max", stats.max)?;
    d.set_item("l2", stats.l2)?;
    d.set_item("mean", stats.mean)?;
    Ok(d)
}

/// Pressure field of a velocity field given as per-component flat sample
/// buffers. All components must have the same cube length `n^dim` where
/// `dim = len(components)`.
#[pyfunction]
fn pressure(components: Vec<Vec<f64>>, points_per_axis: usize) -> PyResult<Vec<f64>> {
    if components.is_empty() {
        return Err(PyValueError::new_err("velocity needs at least one component"));
    }
    let dim = components.len();
    let grid = Grid::standard(dim, points_per_axis).map_err(value_err)?;
    let want = grid.len();
    let mut fields = Vec::with_capacity(dim);
    for (axis, comp) in components.iter().enumerate() {
        if comp.len() != want {
            return Err(PyValueError::new_err(format!(
                "component {axis} has {} samples, grid wants {want}",
                comp.len()
            )));
        }
        fields.push(field_from(&grid, comp));
    }
    let u = VectorField::new(fields).map_err(value_err)?;
    let p = core_pressure(&u, PressureFormula::DoubleDivergence).map_err(value_err)?;
    Ok(p.samples().to_vec())
}

/// Besov norm of a scalar field given as a flat sample buffer over a
/// `dim`-dimensional standard grid, using the full dyadic block range.
#[pyfunction]
fn besov_norm(samples: Vec<f64>, dim: usize, s: f64, q: f64, r: f64) -> PyResult<f64> {
    if dim == 0 {
        return Err(PyValueError::new_err("dim must be positive"));
    }
    let grid = grid_for(dim, samples.len())?;
    let f = field_from(&grid, &samples);
    let spec = NormSpec::besov(s, q, r, grid.block_range());
    Ok(core_besov(&f, &spec).map_err(value_err)?.value)
}

#[pymodule]
fn pcal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(experiment_names, m)?)?;
    m.add_function(wrap_pyfunction!(axis_coords, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(describe_field, m)?)?;
    m.add_function(wrap_pyfunction!(pressure, m)?)?;
    m.add_function(wrap_pyfunction!(besov_norm, m)?)?;
    Ok(())
}
