//! Explicit velocity fields whose pressure exhibits controlled norm growth.
//!
//! Each construction superposes `J` rescaled copies of a fixed profile and
//! reports how a probe quantity (a block projection evaluated at the origin,
//! or a derivative of the pressure there) grows with `J` while the input norm
//! stays bounded. The profiles come in two flavours: spectral annulus bumps
//! (dilated by exact coefficient transport, so per-scale contributions are
//! bitwise dilation-invariant) and compactly supported physical bumps with
//! pairwise disjoint supports.

mod physical;
mod spectral;

pub use physical::{inflate_c1, l1_failure_moments, l1_failure_profile};
pub use spectral::{carrier_field, inflate_half_holder, inflate_s0, inflate_s1};

use crate::error::{Error, Result};
use crate::field::{RealField, SpectralField};
use crate::grid::GridRef;
use crate::lp::DyadicProfile;
use crate::util::line_fit;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Second moments of a profile's spectrum, `m_ab = sum xi_a xi_b w(xi)`.
///
/// For an admissible radial profile `m12` vanishes and `m11 = m22 > 0`, which
/// forces `(d12 phi0)(0) = 0` and `(d11 phi0)(0) = -m11 < 0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfileMoments {
    pub m11: f64,
    pub m22: f64,
    pub m12: f64,
}

/// Parameters shared by the inflation constructions.
///
/// `scales` holds the dilation factors (one per superposed copy, increasing);
/// `annulus` is the spectral support band of the base profile, except for
/// [`inflate_c1`] where it is the physical annulus containing the bump.
/// `separation_exponent` only affects [`inflate_half_holder`], which requires
/// `scale[j-1] <= scale[j]^e`; the default `e = 1/2` is the exact condition.
#[derive(Debug, Clone)]
pub struct InflationConfig {
    pub grid: GridRef,
    pub scales: Vec<f64>,
    pub annulus: [f64; 2],
    pub separation_exponent: f64,
}

impl InflationConfig {
    pub fn new(grid: &GridRef, scales: Vec<f64>, annulus: [f64; 2]) -> Self {
        InflationConfig {
            grid: grid.clone(),
            scales,
            annulus,
            separation_exponent: 0.5,
        }
    }

    /// Number of superposed scales.
    pub fn levels(&self) -> usize {
        self.scales.len()
    }

    /// Scales as exact integers, checked positive and strictly increasing.
    pub(crate) fn integer_scales(&self) -> Result<Vec<i64>> {
        let mut out = Vec::with_capacity(self.scales.len());
        for (i, &s) in self.scales.iter().enumerate() {
            if !(s >= 1.0) || s.fract() != 0.0 {
                return Err(Error::Config(format!(
                    "scale {s} is not a positive integer"
                )));
            }
            let k = s as i64;
            if i > 0 && k <= out[i - 1] {
                return Err(Error::Config("scales must be strictly increasing".into()));
            }
            out.push(k);
        }
        Ok(out)
    }

    /// Checks consecutive ratios against `min_ratio`.
    pub(crate) fn check_ratio(&self, min_ratio: f64) -> Result<()> {
        for w in self.scales.windows(2) {
            if w[1] < w[0] * min_ratio - 1e-9 {
                return Err(Error::Config(format!(
                    "consecutive scale ratio {} below required {}",
                    w[1] / w[0],
                    min_ratio
                )));
            }
        }
        Ok(())
    }
}

/// One row of an inflation sweep: the construction truncated to `levels`
/// scales, with the theorem-side input norm, the probed output quantity and
/// their ratio.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthRow {
    pub levels: usize,
    pub input_norm: f64,
    pub output_norm: f64,
    pub ratio: f64,
}

/// Diagnostics of one inflation construction.
///
/// `diagonal_norm` and `offdiag_point_value` are construction specific: the
/// bounded diagonal-piece norm and the probed growing value for the spectral
/// constructions, the diagonal point value and the cross-term sup-norm for the
/// half-Holder one. `fitted_slope` and `fit_residual` come from a least
/// squares line through the fit-eligible `(levels, ratio)` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InflationReport {
    pub per_level: Vec<GrowthRow>,
    pub diagonal_norm: f64,
    pub offdiag_point_value: f64,
    pub fitted_slope: f64,
    pub fit_residual: f64,
}

/// Least squares of ratio against level count over rows with
/// `levels >= min_levels`; degenerate fits return zeros.
pub(crate) fn fit_rows(rows: &[GrowthRow], min_levels: usize) -> (f64, f64) {
    let xs: Vec<f64> = rows
        .iter()
        .filter(|r| r.levels >= min_levels)
        .map(|r| r.levels as f64)
        .collect();
    let ys: Vec<f64> = rows
        .iter()
        .filter(|r| r.levels >= min_levels)
        .map(|r| r.ratio)
        .collect();
    if xs.len() < 2 {
        return (0.0, 0.0);
    }
    let (slope, _, rms) = line_fit(&xs, &ys);
    (slope, rms)
}

/// Radial indicator profile on the lattice band `band[0] <= |xi| <= band[1]`,
/// together with its second spectral moments.
///
/// Every lattice mode in the band gets unit weight, so the field is real and
/// even. Errors with [`Error::Resolution`] when the band contains no modes.
pub(crate) fn profile_spec(
    grid: &GridRef,
    band: [f64; 2],
) -> Result<(SpectralField, ProfileMoments)> {
    if grid.dim() < 2 {
        return Err(Error::Argument("profile needs at least two axes".into()));
    }
    if !(band[0] > 0.0 && band[0] < band[1] && band[1] < grid.nyquist()) {
        return Err(Error::Config(format!(
            "band [{}, {}] must lie inside (0, {})",
            band[0],
            band[1],
            grid.nyquist()
        )));
    }
    let mut spec = SpectralField::zeros(grid);
    let (mut m11, mut m22, mut m12) = (0.0, 0.0, 0.0);
    let mut count = 0usize;
    spec.for_each_mode(|_, idx, c| {
        let r2: f64 = idx.iter().map(|&k| (k * k) as f64).sum();
        let r = r2.sqrt();
        if r >= band[0] && r <= band[1] {
            *c = Complex64::new(1.0, 0.0);
            m11 += (idx[0] * idx[0]) as f64;
            m22 += (idx[1] * idx[1]) as f64;
            m12 += (idx[0] * idx[1]) as f64;
            count += 1;
        }
    });
    if count == 0 {
        return Err(Error::Resolution(format!(
            "no lattice modes in band [{}, {}]",
            band[0], band[1]
        )));
    }
    Ok((spec, ProfileMoments { m11, m22, m12 }))
}

/// Base profile for the spectral constructions as a real field, plus the
/// moment data that certifies admissibility.
pub fn build_phi0(grid: &GridRef, band: [f64; 2]) -> Result<(RealField, ProfileMoments)> {
    let (spec, moments) = profile_spec(grid, band)?;
    Ok((spec.to_real()?, moments))
}

/// Moves every coefficient from mode `xi` to `m * xi` and multiplies by
/// `amp`. The caller must ensure `m * xi` stays strictly inside Nyquist.
pub(crate) fn transport(spec: &SpectralField, m: i64, amp: f64) -> SpectralField {
    let grid = spec.grid().clone();
    let n = grid.points_per_axis() as i64;
    let mut out = SpectralField::zeros(&grid);
    let mut idx = vec![0usize; grid.dim()];
    let coeffs = out.coeffs_mut();
    spec.visit_modes(|_, signed, c| {
        if c.norm_sqr() == 0.0 {
            return;
        }
        for (a, &k) in signed.iter().enumerate() {
            let t = m * k;
            debug_assert!(2 * t.abs() < n);
            idx[a] = if t >= 0 { t } else { n + t } as usize;
        }
        coeffs[grid.encode(&idx)] = amp * c;
    });
    out
}

/// Multiplies each coefficient by `e^{i xi . shift}`, i.e. translates the
/// field by `-shift` in physical space.
pub(crate) fn modulate(spec: &mut SpectralField, shift: &[f64]) {
    spec.for_each_mode(|_, signed, c| {
        let phase: f64 = signed
            .iter()
            .zip(shift.iter())
            .map(|(&k, &x)| k as f64 * x)
            .sum();
        *c *= Complex64::from_polar(1.0, phase);
    });
}

/// The dyadic block whose multiplier is identically 1 on `[lo, hi]`.
pub(crate) fn covering_block(grid: &GridRef, lo: f64, hi: f64) -> Result<i32> {
    let range = grid.block_range();
    for j in range.iter() {
        let scale = (2.0f64).powi(j);
        if scale * 7.0 / 12.0 <= lo && hi <= scale {
            return Ok(j);
        }
    }
    Err(Error::Config(format!(
        "band [{lo}, {hi}] is not contained in any block plateau"
    )))
}

/// Homogeneous `B^s_{inf,inf}` sup over the grid's dyadic range of a field
/// given by its components: `sup_j 2^{js} sup_x |(P_j f_1, ..., P_j f_m)(x)|`.
///
/// Blocks with no spectral content are skipped, so sparse multi-scale fields
/// cost one transform per component plus one per active block.
pub(crate) fn besov_sup_fields(fields: &[&RealField], s: f64) -> Result<f64> {
    let grid = fields[0].grid().clone();
    for f in fields {
        grid.same_grid(f.grid())?;
    }
    let specs: Vec<SpectralField> = fields.iter().map(|f| f.to_spectral()).collect();
    let range = grid.block_range();
    let mut active = vec![false; range.len()];
    let profile = DyadicProfile;
    for spec in &specs {
        spec.visit_modes(|_, signed, c| {
            if c.norm_sqr() == 0.0 {
                return;
            }
            let r = signed
                .iter()
                .map(|&k| (k * k) as f64)
                .sum::<f64>()
                .sqrt();
            if r == 0.0 {
                return;
            }
            for (slot, j) in range.iter().enumerate() {
                if profile.band(r / (2.0f64).powi(j)) > 0.0 {
                    active[slot] = true;
                }
            }
        });
    }
    let mut sup = 0.0f64;
    for (slot, j) in range.iter().enumerate() {
        if !active[slot] {
            continue;
        }
        let scale = (2.0f64).powi(j);
        let mut mag_sq: Option<Vec<f64>> = None;
        for spec in &specs {
            let mut block = spec.clone();
            block.apply_radial(|r| profile.band(r / scale));
            let part = block.to_real_unchecked();
            match &mut mag_sq {
                None => mag_sq = Some(part.samples().iter().map(|v| v * v).collect()),
                Some(acc) => {
                    for (a, v) in acc.iter_mut().zip(part.samples()) {
                        *a += v * v;
                    }
                }
            }
        }
        let block_sup = mag_sq
            .unwrap()
            .into_iter()
            .fold(0.0f64, f64::max)
            .sqrt();
        sup = sup.max((2.0f64).powi(j).powf(s) * block_sup);
    }
    Ok(sup)
}

/// `dst += c * a * b` pointwise.
pub(crate) fn axpy_product(dst: &mut RealField, c: f64, a: &RealField, b: &RealField) {
    let (av, bv) = (a.samples(), b.samples());
    for (i, d) in dst.samples_mut().iter_mut().enumerate() {
        *d += c * av[i] * bv[i];
    }
}

/// Integral over the torus by exact spectral quadrature: sample mean times
/// volume.
#[cfg(test)]
pub(crate) fn integral(f: &RealField) -> f64 {
    let vol = f.grid().length().powi(f.grid().dim() as i32);
    f.mean() * vol
}

/// Integral of `f * w(x)` for a pointwise weight of the coordinates.
/// Chunked summation keeps the result independent of evaluation order.
#[cfg(test)]
pub(crate) fn weighted_integral<W: Fn(&[f64]) -> f64>(f: &RealField, w: W) -> f64 {
    const CHUNK: usize = 8192;
    let grid = f.grid().clone();
    let n = grid.points_per_axis();
    let d = grid.dim();
    let samples = f.samples();
    let mut idx = vec![0usize; d];
    let mut coords = vec![0.0f64; d];
    let mut total = 0.0f64;
    let mut partial = 0.0f64;
    for (flat, &v) in samples.iter().enumerate() {
        grid.decode(flat, &mut idx);
        for (a, &i) in idx.iter().enumerate() {
            coords[a] = grid.coord(i);
        }
        partial += v * w(&coords);
        if (flat + 1) % CHUNK == 0 {
            total += partial;
            partial = 0.0;
        }
    }
    total += partial;
    let vol = grid.length().powi(d as i32);
    total / (n as f64).powi(d as i32) * vol
}
