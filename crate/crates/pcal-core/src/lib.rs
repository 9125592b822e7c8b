//! Spectral toolkit for pressure regularity experiments on the periodic box:
//! dyadic block calculus, a norm suite, the quadratic pressure operators, and
//! the norm-inflation constructions, with a deterministic experiment harness.

pub mod counterexamples;
pub mod error;
pub mod fft;
pub mod field;
pub mod gen;
pub mod goldenfile;
pub mod grid;
pub mod harness;
pub mod lp;
pub mod norms;
pub mod paraproduct;
pub mod pressure;
pub mod util;

pub use counterexamples::{
    build_phi0, carrier_field, inflate_c1, inflate_half_holder, inflate_s0, inflate_s1,
    l1_failure_moments, l1_failure_profile, GrowthRow, InflationConfig, InflationReport,
    ProfileMoments,
};
pub use error::{Error, Result};
pub use goldenfile::{describe_field, read_field, write_field, FieldHeader, FieldStats};
pub use harness::{
    compare_dirs, run_experiment, thread_budget, CompareOutcome, ExperimentConfig, RunSummary,
};
pub use field::{
    curl, dealiased_product, divergence, forward_transform, gradient, gradient_scale,
    inverse_transform, partial_derivative, pointwise_product, RealField, SpectralField,
    VectorField,
};
pub use grid::{BlockRange, Grid, GridRef};
pub use lp::{
    apply_symbol, fattened_block, fractional_laplacian, project_block, project_low, riesz_double,
    DyadicProfile, HomogeneousSymbol,
};
pub use norms::{
    besov_norm, hardy_norm, holder_seminorm, lebesgue_norm, lr_aggregate, maximal_function,
    second_difference_seminorm, sobolev_norm, HardyReport, NormFamily, NormReport, NormSpec,
};
pub use paraproduct::{leibniz_residual, paraproduct_split, ParaproductTriple};
pub use pressure::{
    bilinear_pressure, divcurl_lhs, divcurl_rhs, pressure, vector_lebesgue, vector_sobolev,
    DivCurlLhs, DivCurlRhs, PressureFormula,
};
