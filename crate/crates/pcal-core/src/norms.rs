use crate::error::{Error, Result};
use crate::field::{RealField, SpectralField};
use crate::grid::{BlockRange, GridRef};
use crate::lp::DyadicProfile;
use crate::util::det_sum_by;
use serde::Serialize;

/// Which scale of norms a `NormSpec` refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormFamily {
    Lebesgue,
    Sobolev,
    Besov,
    Holder,
    Hardy,
}

/// Identifies one norm evaluation: family, regularity `s`, integrability `q`,
/// summability `r` (Besov only), homogeneous flag, and the dyadic block range.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormSpec {
    pub family: NormFamily,
    pub s: f64,
    pub q: f64,
    pub r: f64,
    pub homogeneous: bool,
    pub range: BlockRange,
}

impl NormSpec {
    pub fn besov(s: f64, q: f64, r: f64, range: BlockRange) -> Self {
        NormSpec {
            family: NormFamily::Besov,
            s,
            q,
            r,
            homogeneous: true,
            range,
        }
    }
}

/// Result of a block-based norm evaluation. `per_block` holds
/// `(j, 2^{js} |P_j f|_q)`; for the homogeneous Besov family the value is
/// reproducible bit-exactly as `lr_aggregate` of the block column.
/// `truncation_residue` is the fraction of L2 mass the block range misses.
#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub value: f64,
    #[serde(rename = "blocks")]
    pub per_block: Vec<(i32, f64)>,
    #[serde(rename = "residue")]
    pub truncation_residue: f64,
}

impl NormReport {
    /// Reports whose range misses more than 1% of the field are unusable for
    /// quantitative comparisons.
    pub fn is_flagged(&self) -> bool {
        !(self.truncation_residue <= 0.01)
    }
}

fn check_integrability(q: f64) -> Result<()> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::Argument(format!(
            "integrability exponent must lie in [1, inf], got {q}"
        )));
    }
    Ok(())
}

/// Volume-normalized Lebesgue norm `(L^{-n} int |f|^q)^{1/q}`, computed as the
/// sample mean (trapezoid-exact for band-limited fields); `q = inf` takes the
/// sample maximum.
pub fn lebesgue_norm(f: &RealField, q: f64) -> Result<f64> {
    check_integrability(q)?;
    if q.is_infinite() {
        return Ok(f.max_abs());
    }
    let s = f.samples();
    let m = s.len() as f64;
    let v = if q == 1.0 {
        det_sum_by(s.len(), |i| s[i].abs()) / m
    } else if q == 2.0 {
        (det_sum_by(s.len(), |i| s[i] * s[i]) / m).sqrt()
    } else {
        (det_sum_by(s.len(), |i| s[i].abs().powf(q)) / m).powf(1.0 / q)
    };
    Ok(v)
}

/// Sobolev norm `||grad|^s f|_q`, plus the `|f|_q` term when inhomogeneous.
/// Negative `s` requires zero-mean input.
pub fn sobolev_norm(f: &RealField, s: f64, q: f64, homogeneous: bool) -> Result<f64> {
    check_integrability(q)?;
    let rough = crate::lp::fractional_laplacian(f, s)?;
    let main = lebesgue_norm(&rough, q)?;
    if homogeneous {
        Ok(main)
    } else {
        Ok(lebesgue_norm(f, q)? + main)
    }
}

/// `l^r` aggregation with a fixed left-to-right summation order, so values are
/// reproducible from a stored block column.
pub fn lr_aggregate(vals: &[f64], r: f64) -> f64 {
    if r.is_infinite() {
        vals.iter().fold(0.0f64, |a, &b| a.max(b))
    } else if r == 1.0 {
        let mut acc = 0.0;
        for &v in vals {
            acc += v;
        }
        acc
    } else if r == 2.0 {
        let mut acc = 0.0;
        for &v in vals {
            acc += v * v;
        }
        acc.sqrt()
    } else {
        let mut acc = 0.0;
        for &v in vals {
            acc += v.powf(r);
        }
        acc.powf(1.0 / r)
    }
}

fn validate_range(grid: &GridRef, range: BlockRange) -> Result<()> {
    let full = grid.block_range();
    if range.j_min < full.j_min || range.j_max > full.j_max || range.j_min > range.j_max {
        return Err(Error::Range {
            j: if range.j_min < full.j_min {
                range.j_min
            } else {
                range.j_max
            },
            j_min: full.j_min,
            j_max: full.j_max,
        });
    }
    Ok(())
}

fn block_field(spec: &SpectralField, j: i32) -> RealField {
    let p = DyadicProfile;
    let scale = (2.0f64).powi(j);
    let mut s = spec.clone();
    s.apply_radial(|r| p.band(r / scale));
    s.to_real_unchecked()
}

/// Besov norm: `l^r` over `j` in the range of `2^{js} |P_j f|_q`. The
/// inhomogeneous variant replaces blocks below 1 by the low-pass term
/// `|P_{<=0} f|_q`. The residue measures L2 mass the range cannot see
/// (mean excluded in the homogeneous case).
pub fn besov_norm(f: &RealField, spec: &NormSpec) -> Result<NormReport> {
    check_integrability(spec.q)?;
    if spec.r.is_nan() || spec.r < 1.0 {
        return Err(Error::Argument(format!(
            "summability exponent must lie in [1, inf], got {}",
            spec.r
        )));
    }
    validate_range(f.grid(), spec.range)?;
    let sf = f.to_spectral();

    let mut per_block = Vec::with_capacity(spec.range.len());
    for j in spec.range.iter() {
        let pj = block_field(&sf, j);
        let w = (2.0f64).powf(spec.s * j as f64);
        per_block.push((j, w * lebesgue_norm(&pj, spec.q)?));
    }

    let value = if spec.homogeneous {
        let col: Vec<f64> = per_block.iter().map(|&(_, v)| v).collect();
        lr_aggregate(&col, spec.r)
    } else {
        let p = DyadicProfile;
        let mut low = sf.clone();
        low.apply_radial(|r| p.low(r));
        let low_term = lebesgue_norm(&low.to_real_unchecked(), spec.q)?;
        let tail: Vec<f64> = per_block
            .iter()
            .filter(|&&(j, _)| j >= 1)
            .map(|&(_, v)| v)
            .collect();
        low_term + lr_aggregate(&tail, spec.r)
    };

    // covered multiplier: the blocks telescope to low(r/2^jmax) - low(r/2^{jmin-1})
    let p = DyadicProfile;
    let top = (2.0f64).powi(spec.range.j_max);
    let bottom = (2.0f64).powi(spec.range.j_min - 1);
    let fu = f.grid().freq_unit();
    let mut seen = 0.0f64;
    let mut missed = 0.0f64;
    sf.visit_modes(|_, sk, c| {
        let mut nsq = 0.0;
        for &k in sk {
            nsq += (k * k) as f64;
        }
        let r = nsq.sqrt() * fu;
        if spec.homogeneous && r == 0.0 {
            return;
        }
        let covered = if spec.homogeneous {
            p.low(r / top) - p.low(r / bottom)
        } else {
            p.low(r / top)
        };
        let e = c.norm_sqr();
        seen += e;
        missed += (1.0 - covered) * (1.0 - covered) * e;
    });
    let truncation_residue = if seen == 0.0 {
        0.0
    } else {
        (missed / seen).sqrt()
    };

    Ok(NormReport {
        value,
        per_block,
        truncation_residue,
    })
}

/// Offset stencil shared by the difference seminorms: directions in
/// `{-1,0,1}^n` (first nonzero positive) scaled by `2^m` grid steps,
/// `m = 0 .. log2(N/4)`. Components never exceed a quarter period, so the
/// Euclidean offset length is also the torus distance.
fn offset_set(grid: &GridRef) -> Vec<(f64, [i64; 4])> {
    let d = grid.dim();
    let n = grid.points_per_axis() as i64;
    let step = grid.step();
    let mut dirs: Vec<[i64; 4]> = Vec::new();
    let mut cur = [0i64; 4];
    fn rec(axis: usize, d: usize, cur: &mut [i64; 4], out: &mut Vec<[i64; 4]>) {
        if axis == d {
            let first = cur.iter().find(|&&v| v != 0);
            if first == Some(&1) {
                out.push(*cur);
            }
            return;
        }
        for v in [-1i64, 0, 1] {
            cur[axis] = v;
            rec(axis + 1, d, cur, out);
        }
        cur[axis] = 0;
    }
    rec(0, d, &mut cur, &mut dirs);

    let m_max = (n / 4).max(1).ilog2() as i32;
    let mut out = Vec::new();
    for m in 0..=m_max {
        let scale = 1i64 << m;
        for dir in &dirs {
            let mut delta = [0i64; 4];
            let mut nsq = 0i64;
            for a in 0..d {
                delta[a] = dir[a] * scale;
                nsq += dir[a] * dir[a];
            }
            let h = step * scale as f64 * (nsq as f64).sqrt();
            out.push((h, delta));
        }
    }
    out
}

fn sup_difference<F: Fn(f64, f64, f64) -> f64>(
    f: &RealField,
    offsets: &[(f64, [i64; 4])],
    weight: impl Fn(f64) -> f64,
    diff: F,
) -> f64 {
    let grid = f.grid().clone();
    let d = grid.dim();
    let n = grid.points_per_axis();
    let samples = f.samples();
    let mut best = 0.0f64;
    let mut plus_tab = vec![0usize; d * n];
    let mut minus_tab = vec![0usize; d * n];
    for &(h, delta) in offsets {
        for a in 0..d {
            for i in 0..n {
                let p = (i as i64 + delta[a]).rem_euclid(n as i64) as usize;
                let q = (i as i64 - delta[a]).rem_euclid(n as i64) as usize;
                plus_tab[a * n + i] = p;
                minus_tab[a * n + i] = q;
            }
        }
        let w = weight(h);
        let mut idx = [0usize; 4];
        let mut shifted = [0usize; 4];
        let mut back = [0usize; 4];
        for flat in 0..samples.len() {
            let center = samples[flat];
            for a in 0..d {
                shifted[a] = plus_tab[a * n + idx[a]];
                back[a] = minus_tab[a * n + idx[a]];
            }
            let plus = samples[grid.encode(&shifted[..d])];
            let minus = samples[grid.encode(&back[..d])];
            let v = diff(center, plus, minus) * w;
            if v > best {
                best = v;
            }
            // odometer increment, first axis slowest (row-major layout)
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < n {
                    break;
                }
                idx[a] = 0;
            }
        }
    }
    best
}

/// Holder seminorm estimate: sup of `|f(x) - f(x+h)| / |h|^alpha` over grid
/// points and the dyadic offset stencil. A lower bound of the true seminorm
/// that converges under refinement.
pub fn holder_seminorm(f: &RealField, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!(
            "holder exponent must lie in (0, 1), got {alpha}"
        )));
    }
    let offsets = offset_set(f.grid());
    Ok(sup_difference(
        f,
        &offsets,
        |h| h.powf(-alpha),
        |c, p, _| (c - p).abs(),
    ))
}

/// Centered second-difference seminorm
/// `sup |f(x+h) + f(x-h) - 2 f(x)| / |h|` over the same dyadic stencil;
/// comparable to the first-order Besov block norm.
pub fn second_difference_seminorm(f: &RealField) -> f64 {
    let offsets = offset_set(f.grid());
    sup_difference(
        f,
        &offsets,
        |h| 1.0 / h,
        |c, p, m| (p + m - 2.0 * c).abs(),
    )
}

/// Square-function Hardy norm `|(sum_j |P_j f|^2)^{1/2}|_1` over the given
/// block range. A nonzero mean is removed and reported.
#[derive(Debug, Clone, Copy)]
pub struct HardyReport {
    pub value: f64,
    pub mean_removed: bool,
}

pub fn hardy_norm(f: &RealField, range: BlockRange) -> Result<HardyReport> {
    hardy_norm_spec(&f.to_spectral(), range)
}

/// Spectral entry for the Hardy norm: skips the forward transform when the
/// caller already holds the spectrum. The zero mode never reaches any block
/// (the band profile vanishes at the origin), so it only feeds the
/// mean-removed flag.
pub(crate) fn hardy_norm_spec(sf: &SpectralField, range: BlockRange) -> Result<HardyReport> {
    validate_range(sf.grid(), range)?;
    let mean = sf.zero_mode().norm();
    let mean_removed = mean > 1e-12 * sf.energy().sqrt().max(1e-300);
    let mut sq = vec![0.0f64; sf.grid().samples()];
    for j in range.iter() {
        let pj = block_field(sf, j);
        for (acc, &v) in sq.iter_mut().zip(pj.samples()) {
            *acc += v * v;
        }
    }
    let m = sq.len() as f64;
    let value = det_sum_by(sq.len(), |i| sq[i].sqrt()) / m;
    Ok(HardyReport {
        value,
        mean_removed,
    })
}

/// `(M(|f|^r))^{1/r}` with the maximal average taken over balls of dyadic
/// radii `L 2^{-m}` at every grid point, plus the center-only degenerate ball
/// (which makes the result dominate `|f|` pointwise).
pub fn maximal_function(f: &RealField, r_power: f64) -> Result<RealField> {
    if !(r_power > 0.0 && r_power.is_finite()) {
        return Err(Error::Argument(format!(
            "maximal function power must be positive, got {r_power}"
        )));
    }
    let grid = f.grid().clone();
    let n = grid.points_per_axis();
    let powed: Vec<f64> = f
        .samples()
        .iter()
        .map(|&v| {
            let a = v.abs();
            if r_power == 1.0 {
                a
            } else if r_power == 2.0 {
                a * a
            } else if r_power == 0.5 {
                a.sqrt()
            } else {
                a.powf(r_power)
            }
        })
        .collect();
    let mut best = powed.clone();
    let powed_field = RealField::from_samples(&grid, powed)?;
    let powed_spec = powed_field.to_spectral();
    let total = grid.samples() as f64;

    let m_max = (n / 4).max(1).ilog2() as i32;
    let d = grid.dim();
    let step = grid.step();
    for m in 0..=m_max {
        let rho = grid.length() * (2.0f64).powi(-m);
        // ball indicator in index space; signed folding gives the offset vector
        let mut ind = RealField::zeros(&grid);
        {
            let samples = ind.samples_mut();
            let mut idx = [0usize; 4];
            for (flat, slot) in samples.iter_mut().enumerate() {
                grid.decode(flat, &mut idx[..d]);
                let mut nsq = 0.0;
                for &i in idx[..d].iter() {
                    let off = grid.signed_index(i) as f64 * step;
                    nsq += off * off;
                }
                if nsq.sqrt() <= rho * (1.0 + 1e-12) {
                    *slot = 1.0;
                }
            }
        }
        let count = det_sum_by(ind.samples().len(), |i| ind.samples()[i]);
        if count == 0.0 {
            continue;
        }
        let ind_spec = ind.to_spectral();
        // circular convolution: coeff(avg) = (M / count) ind_hat g_hat
        let mut prod = powed_spec.clone();
        let factor = total / count;
        for (c, w) in prod.coeffs_mut().iter_mut().zip(ind_spec.coeffs()) {
            *c *= w * factor;
        }
        let avg = prod.to_real_unchecked();
        for (b, &v) in best.iter_mut().zip(avg.samples()) {
            if v > *b {
                *b = v;
            }
        }
    }

    let inv = 1.0 / r_power;
    for v in best.iter_mut() {
        *v = if r_power == 1.0 {
            *v
        } else if r_power == 2.0 {
            v.max(0.0).sqrt()
        } else {
            v.max(0.0).powf(inv)
        };
    }
    RealField::from_samples(&grid, best)
}
