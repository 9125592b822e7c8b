use crate::error::{Error, Result};
use crate::field::{RealField, SpectralField};
use num_complex::Complex64;
use std::sync::Arc;

/// Smooth cutoff profile for the dyadic decomposition.
///
/// `low(t)` equals 1 for `t <= 1`, 0 for `t >= 7/6`, with a smoothstep
/// transition built from `e^{-1/t}` mollification; `band(t) = low(t) - low(2t)`
/// is supported on `[1/2, 7/6]` and the shifts `band(t/2^j)` telescope to 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct DyadicProfile;

/// Upper edge of the transition region, as a multiple of the block scale.
pub const PROFILE_TOP: f64 = 7.0 / 6.0;

fn mollifier(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

impl DyadicProfile {
    /// Low-pass shape: 1 on `[0, 1]`, 0 on `[7/6, inf)`.
    pub fn low(self, t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else if t >= PROFILE_TOP {
            0.0
        } else {
            let u = (PROFILE_TOP - t) * 6.0;
            let a = mollifier(u);
            let b = mollifier(1.0 - u);
            a / (a + b)
        }
    }

    /// Band shape `low(t) - low(2t)`, supported on `[1/2, 7/6]`, identically 1
    /// on `[7/12, 1]`.
    pub fn band(self, t: f64) -> f64 {
        self.low(t) - self.low(2.0 * t)
    }
}

fn radial_multiplier<F: Fn(f64) -> f64>(f: &RealField, m: F) -> RealField {
    let mut s = f.to_spectral();
    s.apply_radial(m);
    s.to_real_unchecked()
}

/// Dyadic block projection `P_j f`: multiplier `band(|xi| / 2^j)`.
pub fn project_block(f: &RealField, j: i32) -> Result<RealField> {
    f.grid().validate_block(j)?;
    let p = DyadicProfile;
    let scale = (2.0f64).powi(j);
    Ok(radial_multiplier(f, |r| p.band(r / scale)))
}

pub fn project_block_spec(s: &SpectralField, j: i32) -> Result<SpectralField> {
    s.grid().validate_block(j)?;
    let p = DyadicProfile;
    let scale = (2.0f64).powi(j);
    let mut out = s.clone();
    out.apply_radial(|r| p.band(r / scale));
    Ok(out)
}

/// Low-pass projection `P_{<=j}`: multiplier `low(|xi| / 2^j)`. Valid for
/// `j_min - 1 <= j <= j_max`; at `j_min - 1` only the mean survives.
pub fn project_low(f: &RealField, j: i32) -> Result<RealField> {
    let r = f.grid().block_range();
    if j < r.j_min - 1 || j > r.j_max {
        return Err(Error::Range {
            j,
            j_min: r.j_min - 1,
            j_max: r.j_max,
        });
    }
    let p = DyadicProfile;
    let scale = (2.0f64).powi(j);
    Ok(radial_multiplier(f, |r| p.low(r / scale)))
}

pub fn project_low_spec(s: &SpectralField, j: i32) -> Result<SpectralField> {
    let r = s.grid().block_range();
    if j < r.j_min - 1 || j > r.j_max {
        return Err(Error::Range {
            j,
            j_min: r.j_min - 1,
            j_max: r.j_max,
        });
    }
    let p = DyadicProfile;
    let scale = (2.0f64).powi(j);
    let mut out = s.clone();
    out.apply_radial(|r| p.low(r / scale));
    Ok(out)
}

/// Fattened block `sum_{|i-j| <= window} P_i f`, clipped to the valid range.
/// The default window 1 reproduces the block on anything `P_j`-supported.
pub fn fattened_block(f: &RealField, j: i32, window: i32) -> Result<RealField> {
    f.grid().validate_block(j)?;
    if window < 1 {
        return Err(Error::Argument("fattening window must be >= 1".into()));
    }
    let range = f.grid().block_range();
    let p = DyadicProfile;
    let lo = (j - window).max(range.j_min);
    let hi = (j + window).min(range.j_max);
    Ok(radial_multiplier(f, |r| {
        let mut acc = 0.0;
        for i in lo..=hi {
            acc += p.band(r / (2.0f64).powi(i));
        }
        acc
    }))
}

/// Fractional Laplacian `|grad|^s`: radial multiplier `|xi|^s`, zero mode
/// mapped to zero. Negative `s` requires zero-mean input.
pub fn fractional_laplacian(f: &RealField, s: f64) -> Result<RealField> {
    let spec = f.to_spectral();
    Ok(fractional_laplacian_spec(&spec, s)?.to_real_unchecked())
}

pub fn fractional_laplacian_spec(spec: &SpectralField, s: f64) -> Result<SpectralField> {
    if !s.is_finite() {
        return Err(Error::Argument("exponent must be finite".into()));
    }
    if s < 0.0 {
        let mean = spec.zero_mode().norm();
        let l2 = spec.energy().sqrt();
        if mean > 1e-12 * l2.max(1e-300) {
            return Err(Error::Domain(format!(
                "negative-order operator needs zero mean: |mean| = {mean:.3e}, |f|_2 = {l2:.3e}"
            )));
        }
    }
    let mut out = spec.clone();
    out.apply_radial(|r| if r == 0.0 { 0.0 } else { r.powf(s) });
    Ok(out)
}

/// Second-order Riesz composition: multiplier `xi_l xi_k / |xi|^2`, zero mode 0.
/// The trace over `l = k` reproduces `f - mean(f)`.
pub fn riesz_double(f: &RealField, l: usize, k: usize) -> Result<RealField> {
    let d = f.grid().dim();
    if l >= d || k >= d {
        return Err(Error::Argument(format!(
            "component indices ({l}, {k}) out of bounds for dimension {d}"
        )));
    }
    let mut s = f.to_spectral();
    s.for_each_mode(|_, sk, c| {
        let mut nsq = 0.0;
        for &kk in sk {
            nsq += (kk * kk) as f64;
        }
        if nsq == 0.0 {
            *c = Complex64::default();
        } else {
            *c *= (sk[l] as f64) * (sk[k] as f64) / nsq;
        }
    });
    Ok(s.to_real_unchecked())
}

/// Homogeneous Fourier multiplier `|xi|^degree * angular(xi/|xi|)`. The
/// angular part must be Hermitian-compatible (`A(-w) = conj(A(w))`) for real
/// output; violations surface as symmetry errors on inversion.
#[derive(Clone)]
pub struct HomogeneousSymbol {
    degree: f64,
    angular: Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>,
}

impl std::fmt::Debug for HomogeneousSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HomogeneousSymbol")
            .field("degree", &self.degree)
            .finish()
    }
}

impl HomogeneousSymbol {
    pub fn new<F: Fn(&[f64]) -> Complex64 + Send + Sync + 'static>(degree: f64, angular: F) -> Self {
        HomogeneousSymbol {
            degree,
            angular: Arc::new(angular),
        }
    }

    /// `|xi|^s`.
    pub fn fractional(s: f64) -> Self {
        HomogeneousSymbol::new(s, |_| Complex64::new(1.0, 0.0))
    }

    /// `xi_l xi_k / |xi|^2`.
    pub fn riesz_pair(l: usize, k: usize) -> Self {
        HomogeneousSymbol::new(0.0, move |w| Complex64::new(w[l] * w[k], 0.0))
    }

    /// `i xi_l / |xi|`, the normalized directional derivative.
    pub fn directional(l: usize) -> Self {
        HomogeneousSymbol::new(0.0, move |w| Complex64::new(0.0, w[l]))
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        let mut nsq = 0.0;
        for &x in xi {
            nsq += x * x;
        }
        if nsq == 0.0 {
            return Complex64::default();
        }
        let r = nsq.sqrt();
        let mut w = [0.0f64; 4];
        for (a, &x) in xi.iter().enumerate() {
            w[a] = x / r;
        }
        r.powf(self.degree) * (self.angular)(&w[..xi.len()])
    }
}

/// Apply a homogeneous symbol; the zero mode is always mapped to zero, and
/// negative degree requires zero-mean input like `fractional_laplacian`.
pub fn apply_symbol(f: &RealField, symbol: &HomogeneousSymbol) -> Result<RealField> {
    let mut s = f.to_spectral();
    if symbol.degree < 0.0 {
        let mean = s.zero_mode().norm();
        let l2 = s.energy().sqrt();
        if mean > 1e-12 * l2.max(1e-300) {
            return Err(Error::Domain(format!(
                "negative-degree symbol needs zero mean: |mean| = {mean:.3e}"
            )));
        }
    }
    let fu = s.grid().freq_unit();
    let mut xi = [0.0f64; 4];
    let d = s.grid().dim();
    s.for_each_mode(|_, sk, c| {
        for a in 0..d {
            xi[a] = sk[a] as f64 * fu;
        }
        *c *= symbol.eval(&xi[..d]);
    });
    s.to_real()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::partial_derivative;
    use crate::grid::Grid;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn band_limited(grid: &crate::grid::GridRef, cutoff: f64, seed: u64) -> RealField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = SpectralField::zeros(grid);
        let fu = grid.freq_unit();
        let mut draws: Vec<(usize, Complex64)> = Vec::new();
        s.for_each_mode(|flat, sk, _| {
            let mut nsq = 0.0;
            let mut lex_pos = false;
            for &k in sk {
                nsq += (k * k) as f64;
            }
            for &k in sk {
                if k != 0 {
                    lex_pos = k > 0;
                    break;
                }
            }
            let r = nsq.sqrt() * fu;
            if lex_pos && r > 0.0 && r <= cutoff {
                let amp = r.powf(-1.0) * rng.random_range(0.5..1.5);
                let ph = rng.random_range(0.0..std::f64::consts::TAU);
                draws.push((flat, amp * Complex64::new(ph.cos(), ph.sin())));
            }
        });
        for (flat, c) in draws {
            s.coeffs_mut()[flat] = c;
        }
        // mirror for Hermitian symmetry
        let n = grid.points_per_axis();
        let d = grid.dim();
        let mut mirrored = s.clone();
        s.visit_modes(|flat, sk, c| {
            if c != Complex64::default() {
                let mut neg = [0usize; 4];
                for a in 0..d {
                    neg[a] = (n as i64 - sk[a]).rem_euclid(n as i64) as usize;
                }
                let nflat = grid.encode(&neg[..d]);
                mirrored.coeffs_mut()[nflat] = c.conj();
                let _ = flat;
            }
        });
        mirrored.to_real().unwrap()
    }

    #[test]
    fn profile_shape() {
        let p = DyadicProfile;
        assert_eq!(p.low(0.3), 1.0);
        assert_eq!(p.low(1.0), 1.0);
        assert_eq!(p.low(PROFILE_TOP), 0.0);
        assert_eq!(p.low(5.0), 0.0);
        let mid = p.low(1.08);
        assert!(mid > 0.0 && mid < 1.0);
        // monotone decreasing through the transition
        let mut prev = 1.0;
        for i in 0..=60 {
            let t = 1.0 + (PROFILE_TOP - 1.0) * i as f64 / 60.0;
            let v = p.low(t);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        assert_eq!(p.band(0.49), 0.0);
        assert_eq!(p.band(0.5), 0.0);
        assert_eq!(p.band(0.8), 1.0);
        assert_eq!(p.band(1.0), 1.0);
        assert_eq!(p.band(PROFILE_TOP), 0.0);
    }

    #[test]
    fn shifted_bands_telescope_to_one() {
        let p = DyadicProfile;
        for i in 0..200 {
            let t = (2.0f64).powf(-6.0 + 13.0 * i as f64 / 199.0);
            let mut acc = 0.0;
            for j in -12..=12 {
                acc += p.band(t / (2.0f64).powi(j));
            }
            assert!((acc - 1.0).abs() < 1e-10, "partition defect at t = {t}");
        }
    }

    #[test]
    fn block_projection_examples() {
        let g = Grid::standard(2, 256).unwrap();
        let f = RealField::from_fn(&g, |x| (4.0 * x[0]).cos());
        let p2 = project_block(&f, 2).unwrap();
        assert!(p2.sub(&f).max_abs() < 1e-12);
        let p5 = project_block(&f, 5).unwrap();
        assert!(p5.max_abs() < 1e-14);
    }

    #[test]
    fn out_of_range_block_is_an_error() {
        let g = Grid::standard(2, 64).unwrap();
        let f = RealField::from_fn(&g, |x| x[0].cos());
        assert!(matches!(
            project_block(&f, 40),
            Err(Error::Range { j: 40, .. })
        ));
        assert!(matches!(
            project_block(&f, -3),
            Err(Error::Range { j: -3, .. })
        ));
    }

    #[test]
    fn blocks_and_low_part_reconstruct() {
        let g = Grid::standard(2, 64).unwrap();
        let f = band_limited(&g, 14.0, 5);
        let range = g.block_range();
        let mut acc = project_low(&f, range.j_min - 1).unwrap();
        for j in range.iter() {
            acc.add_assign(&project_block(&f, j).unwrap());
        }
        let defect = acc.sub(&f).max_abs();
        assert!(defect < 1e-10 * f.l2().max(1.0), "defect {defect}");
    }

    #[test]
    fn distant_blocks_annihilate_exactly() {
        let g = Grid::standard(2, 128).unwrap();
        let f = band_limited(&g, 30.0, 9);
        // spectral composition: disjoint multiplier supports give exact zeros
        let s3 = project_block_spec(&f.to_spectral(), 3).unwrap();
        assert_eq!(project_block_spec(&s3, 5).unwrap().energy(), 0.0);
        assert_eq!(project_block_spec(&s3, 1).unwrap().energy(), 0.0);
        // the real-space route reintroduces only transform roundoff
        let p3 = project_block(&f, 3).unwrap();
        let p5_of_p3 = project_block(&p3, 5).unwrap();
        assert!(p5_of_p3.l2() < 1e-14 * f.l2());
        // adjacent blocks do interact
        let p4_of_p3 = project_block(&p3, 4).unwrap();
        assert!(p4_of_p3.l2() > 1e-3 * f.l2());
    }

    #[test]
    fn fattened_block_covers_its_core() {
        let g = Grid::standard(2, 128).unwrap();
        let f = band_limited(&g, 30.0, 13);
        let p4 = project_block(&f, 4).unwrap();
        let fat = fattened_block(&p4, 4, 1).unwrap();
        assert!(fat.sub(&p4).max_abs() < 1e-12 * p4.max_abs().max(1.0));
    }

    #[test]
    fn low_pass_at_top_of_range_is_identity() {
        let g = Grid::standard(2, 64).unwrap();
        let f = band_limited(&g, 14.0, 21);
        let top = g.block_range().j_max;
        let low = project_low(&f, top).unwrap();
        assert!(low.sub(&f).max_abs() < 1e-12);
        let fast = RealField::from_fn(&g, |x| (20.0 * x[0]).cos());
        let cut = project_low(&fast, 1).unwrap();
        assert!(cut.max_abs() < 1e-14);
    }

    #[test]
    fn fractional_laplacian_eigenfunctions() {
        let g = Grid::standard(2, 64).unwrap();
        let f = RealField::from_fn(&g, |x| (2.0 * x[0]).cos());
        for s in [0.5, 1.0, 2.0, -1.0] {
            let out = fractional_laplacian(&f, s).unwrap();
            let want_amp = (2.0f64).powf(s);
            let mut want = f.clone();
            want.scale(want_amp);
            assert!(out.sub(&want).max_abs() < 1e-12 * want_amp.max(1.0));
        }
    }

    #[test]
    fn fractional_laplacian_zero_order_removes_mean() {
        let g = Grid::standard(1, 32).unwrap();
        let f = RealField::from_fn(&g, |x| 3.0 + x[0].sin());
        let out = fractional_laplacian(&f, 0.0).unwrap();
        let want = RealField::from_fn(&g, |x| x[0].sin());
        assert!(out.sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn negative_order_requires_zero_mean() {
        let g = Grid::standard(1, 32).unwrap();
        let f = RealField::from_fn(&g, |x| 1.0 + x[0].sin());
        assert!(matches!(
            fractional_laplacian(&f, -0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn fractional_inverse_composition() {
        let g = Grid::standard(2, 64).unwrap();
        let f = band_limited(&g, 14.0, 31);
        let up = fractional_laplacian(&f, 0.7).unwrap();
        let back = fractional_laplacian(&up, -0.7).unwrap();
        let mut want = f.clone();
        let m = f.mean();
        for v in want.samples_mut() {
            *v -= m;
        }
        assert!(back.sub(&want).max_abs() < 1e-10 * f.max_abs().max(1.0));
    }

    #[test]
    fn riesz_pairs() {
        let g = Grid::standard(2, 64).unwrap();
        let f = RealField::from_fn(&g, |x| x[0].cos());
        let r11 = riesz_double(&f, 0, 0).unwrap();
        assert!(r11.sub(&f).max_abs() < 1e-12);
        let r12 = riesz_double(&f, 0, 1).unwrap();
        assert!(r12.max_abs() < 1e-14);
        let h = band_limited(&g, 14.0, 41);
        let mut trace = riesz_double(&h, 0, 0).unwrap();
        trace.add_assign(&riesz_double(&h, 1, 1).unwrap());
        let mut want = h.clone();
        let m = h.mean();
        for v in want.samples_mut() {
            *v -= m;
        }
        assert!(trace.sub(&want).max_abs() < 1e-12 * h.max_abs().max(1.0));
    }

    #[test]
    fn symbol_degree_zero_identity() {
        let g = Grid::standard(2, 32).unwrap();
        let f = RealField::from_fn(&g, |x| 2.0 + x[0].cos() + (3.0 * x[1]).sin());
        let sym = HomogeneousSymbol::fractional(0.0);
        let out = apply_symbol(&f, &sym).unwrap();
        let want = RealField::from_fn(&g, |x| x[0].cos() + (3.0 * x[1]).sin());
        assert!(out.sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn normalized_derivative_symbol_rotates_cosine() {
        let g = Grid::standard(2, 64).unwrap();
        let f = RealField::from_fn(&g, |x| x[0].cos());
        let out = apply_symbol(&f, &HomogeneousSymbol::directional(0)).unwrap();
        let want = RealField::from_fn(&g, |x| -x[0].sin());
        assert!(out.sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn degree_two_symbol_is_minus_laplacian() {
        let g = Grid::standard(2, 64).unwrap();
        let f = band_limited(&g, 14.0, 77);
        let out = apply_symbol(&f, &HomogeneousSymbol::fractional(2.0)).unwrap();
        let mut want = partial_derivative(&partial_derivative(&f, 0).unwrap(), 0).unwrap();
        want.add_assign(&partial_derivative(&partial_derivative(&f, 1).unwrap(), 1).unwrap());
        want.scale(-1.0);
        assert!(out.sub(&want).max_abs() < 1e-12 * want.max_abs().max(1.0));
    }

    #[test]
    fn non_hermitian_symbol_is_rejected() {
        let g = Grid::standard(2, 32).unwrap();
        let f = band_limited(&g, 6.0, 3);
        // constant imaginary angular part: A(-w) != conj(A(w))
        let bad = HomogeneousSymbol::new(0.0, |_| Complex64::new(0.0, 1.0));
        assert!(matches!(
            apply_symbol(&f, &bad),
            Err(Error::Symmetry { .. })
        ));
    }
}
