//! Inflation and integrability counterexamples built from compactly
//! supported bumps.
//!
//! Unlike the spectral stacks these fields live on disjoint physical
//! supports, so cross terms between scales vanish at the sample level and
//! per-scale contributions add exactly. That exactness is why the pressure
//! here is assembled from plain pointwise products: interpolation in the
//! dealiased route would smear the factors across the support gaps and
//! reintroduce the cross terms the construction is built to kill. The price
//! is that nothing is band-limited; dilation identities hold exactly at
//! matched sampling and otherwise up to the bump's spectral tail.

use super::{axpy_product, fit_rows, spectral::pressure_from_products, GrowthRow,
    InflationConfig, InflationReport};
use crate::error::{Error, Result};
use crate::field::{RealField, VectorField};
use crate::grid::GridRef;
use crate::util::det_sum_by;

/// Modulation frequency of the bump profile; the probed second derivative
/// of the pressure grows like its square.
const C1_MODULATION: f64 = 8.0;

/// `exp(-1 / (1 - t^2))` of the squared argument, zero outside the unit ball.
fn mollifier(t2: f64) -> f64 {
    if t2 < 1.0 {
        (-1.0 / (1.0 - t2)).exp()
    } else {
        0.0
    }
}

/// Wraps into `[-len/2, len/2)`.
fn wrap(t: f64, len: f64) -> f64 {
    let r = t.rem_euclid(len);
    if r >= len / 2.0 {
        r - len
    } else {
        r
    }
}

/// One scale of the bump stack: `k^{-2} phi0(k x)` with
/// `phi0(y) = cos(k_mod y_2) m((y - x_star) / eta)` and `x_star = center e_1`.
fn scaled_bump(
    grid: &GridRef,
    center: f64,
    eta: f64,
    k_mod: f64,
    k: i64,
    amp: f64,
) -> RealField {
    let len = grid.length();
    let kf = k as f64;
    RealField::from_fn(grid, |x| {
        let mut t2 = 0.0;
        for (a, &xa) in x.iter().enumerate() {
            let mut y = wrap(kf * xa, len);
            if a == 0 {
                y -= center;
            }
            t2 += (y / eta) * (y / eta);
        }
        let b = mollifier(t2);
        if b == 0.0 {
            0.0
        } else {
            amp * (k_mod * kf * x[1]).cos() * b
        }
    })
}

/// `sup |u| + sup |grad u|_F`, the inhomogeneous C1 size of a velocity.
fn c1_norm(u: &VectorField) -> f64 {
    let grid = u.grid().clone();
    let sup = u.magnitude().max_abs();
    let mut grad_sq = RealField::zeros(&grid);
    for comp in u.components() {
        let spec = comp.to_spectral();
        for a in 0..grid.dim() {
            let d = spec.derivative(a).to_real_unchecked();
            axpy_product(&mut grad_sq, 1.0, &d, &d);
        }
    }
    sup + grad_sq.max_abs().sqrt()
}

fn c1_run(config: &InflationConfig, k_mod: f64) -> Result<(InflationReport, f64)> {
    let grid = &config.grid;
    let d = grid.dim();
    if d < 2 {
        return Err(Error::Argument("construction needs at least two axes".into()));
    }
    let scales = config.integer_scales()?;
    if scales.is_empty() {
        return Err(Error::Config("need at least one scale".into()));
    }
    let [c1a, c2a] = config.annulus;
    if !(c1a > 0.0 && c1a < c2a && c2a < grid.length() / 2.0) {
        return Err(Error::Config(format!(
            "annulus [{c1a}, {c2a}] must sit inside (0, {})",
            grid.length() / 2.0
        )));
    }
    // Scale ratios must exceed the annulus aspect or the dilated annuli
    // overlap radially.
    config.check_ratio(c2a / c1a)?;
    let eta = (c2a - c1a) / 2.0;
    let center = (c1a + c2a) / 2.0;
    let top = *scales.last().unwrap() as f64;
    if eta / top < 3.0 * grid.step() {
        return Err(Error::Resolution(format!(
            "smallest bump radius {} under three grid steps",
            eta / top
        )));
    }
    let summands: Vec<RealField> = scales
        .iter()
        .map(|&k| scaled_bump(grid, center, eta, k_mod, k, 1.0 / (k * k) as f64))
        .collect();
    for s in &summands {
        if s.max_abs() == 0.0 {
            return Err(Error::Resolution("a bump scale vanished in sampling".into()));
        }
    }
    // Torus dilation spreads each bump over k^d translated copies; the
    // config is only valid when the sampled supports stay pairwise disjoint.
    for i in 0..summands.len() {
        for j in i + 1..summands.len() {
            let a = summands[i].samples();
            let b = summands[j].samples();
            if a.iter().zip(b).any(|(&x, &y)| x != 0.0 && y != 0.0) {
                return Err(Error::Config(format!(
                    "bump supports of scales {} and {} overlap",
                    scales[i], scales[j]
                )));
            }
        }
    }

    let mut phi = RealField::zeros(grid);
    let mut rows = Vec::with_capacity(scales.len());
    let mut signed_probe = 0.0;
    for (i, s) in summands.iter().enumerate() {
        phi.add_assign(s);
        let spec = phi.to_spectral();
        let mut u1 = spec.derivative(1).to_real_unchecked();
        u1.scale(-1.0);
        let u2 = spec.derivative(0).to_real_unchecked();
        // Plain products keep the cross terms of disjoint bumps exactly
        // zero; the inactive components contribute nothing.
        let p = pressure_from_products(&[&u1, &u2])?;
        let mut comps = vec![u1, u2];
        while comps.len() < d {
            comps.push(RealField::zeros(grid));
        }
        let u = VectorField::new(comps)?;
        let probe = p
            .to_spectral()
            .derivative(0)
            .derivative(0)
            .to_real_unchecked()
            .value_at_origin();
        let input_norm = c1_norm(&u) + u.l2();
        let output_norm = probe.abs();
        rows.push(GrowthRow {
            levels: i + 1,
            input_norm,
            output_norm,
            ratio: output_norm / input_norm,
        });
        signed_probe = probe;
    }
    let top_output = rows.last().unwrap().output_norm;
    // Unlike the spectral stacks the first level already carries the full
    // per-scale quantum, so the fit may use every row.
    let (fitted_slope, fit_residual) = fit_rows(&rows, 1);
    Ok((
        InflationReport {
            per_level: rows,
            diagonal_norm: top_output,
            // Cross advection terms vanish identically on disjoint supports.
            offdiag_point_value: 0.0,
            fitted_slope,
            fit_residual,
        },
        signed_probe,
    ))
}

/// Norm inflation for the pressure from a merely C1 velocity.
///
/// The stream function stacks bumps on dilates of a physical annulus,
/// `phi = sum_j k_j^{-2} phi0(k_j x)`, where `phi0` is a modulated mollifier
/// supported in `config.annulus`. Pairwise disjoint supports make cross
/// terms vanish exactly, and by dilation invariance every scale adds the
/// same amount to the probe `(d11 p)(0)`, which therefore grows linearly in
/// the level count while `|u|_{C^1} + |u|_2` stays bounded. Works in two or
/// three dimensions; the velocity is the planar curl padded with a zero
/// third component.
pub fn inflate_c1(config: &InflationConfig) -> Result<InflationReport> {
    c1_run(config, C1_MODULATION).map(|(report, _)| report)
}

/// Stream function whose pressure integrand carries slowly decaying
/// quadratic moments: a radial bump of radius 2 modulated along the first
/// axis, `phi = cos(k x_1) b(|x|)`.
pub fn l1_failure_profile(grid: &GridRef, k: usize) -> Result<RealField> {
    if grid.dim() != 2 {
        return Err(Error::Argument("profile is two dimensional".into()));
    }
    const RADIUS: f64 = 2.0;
    if grid.length() / 2.0 <= RADIUS {
        return Err(Error::Config("domain too small for the bump".into()));
    }
    let kf = k as f64;
    if kf >= grid.nyquist() / 2.0 {
        return Err(Error::Config("modulation too fast for the grid".into()));
    }
    Ok(RealField::from_fn(grid, |x| {
        let t2 = (x[0] * x[0] + x[1] * x[1]) / (RADIUS * RADIUS);
        let b = mollifier(t2);
        if b == 0.0 {
            0.0
        } else {
            (kf * x[0]).cos() * b
        }
    }))
}

/// Quadratic moments of the pressure integrand of a compactly supported
/// stream function.
///
/// For `g = (d12 phi)^2 - d11 phi d22 phi` (half the negated pressure
/// Laplacian) the divergence structure of `g` turns its second moments into
/// first-derivative energies:
/// `int g x1^2 = int (d2 phi)^2`, `int g x2^2 = int (d1 phi)^2` and
/// `int g x1 x2 = -int d1 phi d2 phi`. Returned in that order as
/// `(c1, c2, c12)`. The identities need the support to stay clear of the
/// box boundary; more than `1e-8` of the L2 mass on the outermost sample
/// layers is a support error.
pub fn l1_failure_moments(phi: &RealField) -> Result<(f64, f64, f64)> {
    let grid = phi.grid().clone();
    if grid.dim() != 2 {
        return Err(Error::Argument("moments are two dimensional".into()));
    }
    let n = grid.points_per_axis();
    let samples = phi.samples();
    let mut total = 0.0f64;
    let mut boundary = 0.0f64;
    let mut idx = vec![0usize; 2];
    for (flat, &v) in samples.iter().enumerate() {
        total += v * v;
        grid.decode(flat, &mut idx);
        if idx.iter().any(|&i| i == 0 || i == n - 1) {
            boundary += v * v;
        }
    }
    if total > 0.0 && (boundary / total).sqrt() > 1e-8 {
        return Err(Error::Support(format!(
            "boundary layers hold {:.3e} of the L2 mass",
            (boundary / total).sqrt()
        )));
    }
    let spec = phi.to_spectral();
    let d1 = spec.derivative(0).to_real_unchecked();
    let d2 = spec.derivative(1).to_real_unchecked();
    let vol = grid.length() * grid.length();
    let m = samples.len() as f64;
    let d1s = d1.samples();
    let d2s = d2.samples();
    let c1 = det_sum_by(d2s.len(), |i| d2s[i] * d2s[i]) / m * vol;
    let c2 = det_sum_by(d1s.len(), |i| d1s[i] * d1s[i]) / m * vol;
    let c12 = -det_sum_by(d1s.len(), |i| d1s[i] * d2s[i]) / m * vol;
    Ok((c1, c2, c12))
}
