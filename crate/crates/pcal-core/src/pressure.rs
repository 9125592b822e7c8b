//! The incompressible pressure operator in its three equivalent forms, the
//! underlying bilinear operator, and the generalized div-curl functional.

use crate::error::{Error, Result};
use crate::field::{
    dealiased_product, divergence, gradient_scale, padded_samples, truncate_padded, RealField,
    SpectralField, VectorField,
};
use crate::norms::lebesgue_norm;
use num_complex::Complex64;

/// The three displayed forms of the pressure equation. They agree on
/// solenoidal input; the precondition enforces that regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureFormula {
    /// `p = -div^{-1 of Laplace} div((u . grad) u)`: advect, then divergence.
    DivOfAdvection,
    /// `-lap p = sum_{l,k} d_l d_k (u_l u_k)`: double divergence of the
    /// momentum flux.
    DoubleDivergence,
    /// `-lap p = sum_{l,k} (d_l u_k)(d_k u_l)`: gradient contraction, using
    /// incompressibility to drop the advective remainder.
    GradientContraction,
}

const SOLENOID_TOL: f64 = 1e-8;

fn require_solenoidal(u: &VectorField) -> Result<()> {
    let defect = divergence(u).l2();
    let scale = gradient_scale(u);
    if defect > SOLENOID_TOL * scale {
        return Err(Error::Solenoidality { defect, scale });
    }
    Ok(())
}

/// `1/|xi|^2` with zero mode killed: the inverse Laplacian up to sign.
fn solve_minus_laplace(mut rhs: SpectralField) -> SpectralField {
    rhs.for_each_mode(|_, sk, c| {
        let mut nsq = 0.0;
        for &k in sk {
            nsq += (k * k) as f64;
        }
        if nsq == 0.0 {
            *c = Complex64::default();
        } else {
            *c /= nsq;
        }
    });
    rhs
}

/// Pressure of a divergence-free velocity field; zero mean, sign fixed so
/// that `-lap p` reproduces the double divergence of `u (x) u`.
pub fn pressure(u: &VectorField, formula: PressureFormula) -> Result<RealField> {
    require_solenoidal(u)?;
    let d = u.grid().dim();
    match formula {
        PressureFormula::DoubleDivergence => {
            // p = -sum_{l,k} R_{lk}(u_l u_k), R_{lk} = xi_l xi_k / |xi|^2
            let mut acc = SpectralField::zeros(u.grid());
            for l in 0..d {
                for k in l..d {
                    let w = dealiased_product(u.component(l), u.component(k))?;
                    let mut s = w.to_spectral();
                    let weight = if l == k { 1.0 } else { 2.0 };
                    s.for_each_mode(|_, sk, c| {
                        let mut nsq = 0.0;
                        for &kk in sk {
                            nsq += (kk * kk) as f64;
                        }
                        if nsq == 0.0 {
                            *c = Complex64::default();
                        } else {
                            *c *= -weight * (sk[l] * sk[k]) as f64 / nsq;
                        }
                    });
                    acc.add_assign(&s);
                }
            }
            Ok(acc.to_real_unchecked())
        }
        PressureFormula::DivOfAdvection => {
            // -lap p = div((u.grad)u) once div u = 0
            let grads: Vec<Vec<RealField>> = (0..d)
                .map(|l| {
                    let s = u.component(l).to_spectral();
                    (0..d).map(|k| s.derivative(k).to_real_unchecked()).collect()
                })
                .collect();
            let mut div_adv = SpectralField::zeros(u.grid());
            for l in 0..d {
                let mut adv = SpectralField::zeros(u.grid());
                for k in 0..d {
                    let term = dealiased_product(u.component(k), &grads[l][k])?;
                    adv.add_assign(&term.to_spectral());
                }
                div_adv.add_assign(&adv.derivative(l));
            }
            Ok(solve_minus_laplace(div_adv).to_real_unchecked())
        }
        PressureFormula::GradientContraction => {
            // -lap p = sum_{l,k} (d_l u_k)(d_k u_l); RHS symmetric in (l,k)
            let grads: Vec<Vec<RealField>> = (0..d)
                .map(|l| {
                    let s = u.component(l).to_spectral();
                    (0..d).map(|k| s.derivative(k).to_real_unchecked()).collect()
                })
                .collect();
            let mut rhs = SpectralField::zeros(u.grid());
            for l in 0..d {
                for k in l..d {
                    let term = dealiased_product(&grads[k][l], &grads[l][k])?;
                    let mut s = term.to_spectral();
                    if l != k {
                        for c in s.coeffs_mut() {
                            *c *= 2.0;
                        }
                    }
                    rhs.add_assign(&s);
                }
            }
            Ok(solve_minus_laplace(rhs).to_real_unchecked())
        }
    }
}

/// `B(f, g) = sum_{l,k} d_l d_k lap^{-1}(f_l g_k)`, the bilinear form behind
/// the pressure: `B(u, u) = -pressure(u)`.
pub fn bilinear_pressure(f: &VectorField, g: &VectorField) -> Result<RealField> {
    require_solenoidal(f)?;
    require_solenoidal(g)?;
    f.grid().same_grid(g.grid())?;
    let d = f.grid().dim();
    let mut acc = SpectralField::zeros(f.grid());
    for l in 0..d {
        for k in 0..d {
            let w = dealiased_product(f.component(l), g.component(k))?;
            let mut s = w.to_spectral();
            s.for_each_mode(|_, sk, c| {
                let mut nsq = 0.0;
                for &kk in sk {
                    nsq += (kk * kk) as f64;
                }
                if nsq == 0.0 {
                    *c = Complex64::default();
                } else {
                    *c *= (sk[l] * sk[k]) as f64 / nsq;
                }
            });
            acc.add_assign(&s);
        }
    }
    Ok(acc.to_real_unchecked())
}

/// Left side of the generalized div-curl estimate.
#[derive(Debug, Clone, Copy)]
pub struct DivCurlLhs {
    pub value: f64,
    /// Mean of `f . g` removed before a non-positive-order multiplier.
    pub removed_mean: f64,
}

/// `||grad|^s (f . g)|_{H1}` for solenoidal `f` and irrotational `g` on the
/// 3-torus. For `s <= 0` the mean of `f . g` is removed first and reported.
pub fn divcurl_lhs(f: &VectorField, g: &VectorField, s: f64) -> Result<DivCurlLhs> {
    divcurl_lhs_from_parts(&divcurl_prepare(f, g)?, s)
}

/// Validated, s-independent state of one div-curl pair: component spectra
/// and the dealiased dot product. Sweeps over several orders reuse it
/// instead of redoing the structure checks and the big padded transforms.
pub(crate) struct DivCurlParts {
    dot_spec: SpectralField,
    f_spectra: Vec<SpectralField>,
    g_spectra: Vec<SpectralField>,
}

pub(crate) fn divcurl_prepare(f: &VectorField, g: &VectorField) -> Result<DivCurlParts> {
    if f.grid().dim() != 3 {
        return Err(Error::Argument(format!(
            "div-curl functional needs dimension 3, got {}",
            f.grid().dim()
        )));
    }
    f.grid().same_grid(g.grid())?;
    let f_spectra: Vec<SpectralField> = f.components().iter().map(|c| c.to_spectral()).collect();
    let g_spectra: Vec<SpectralField> = g.components().iter().map(|c| c.to_spectral()).collect();

    let jacobian_scale = |spectra: &[SpectralField]| -> f64 {
        let mut s = 0.0;
        for spec in spectra {
            for a in 0..3 {
                s += spec.derivative(a).energy();
            }
        }
        s.sqrt()
    };
    let mut div = f_spectra[0].derivative(0);
    div.add_assign(&f_spectra[1].derivative(1));
    div.add_assign(&f_spectra[2].derivative(2));
    let div_defect = div.energy().sqrt();
    let f_scale = jacobian_scale(&f_spectra);
    if div_defect > SOLENOID_TOL * f_scale {
        return Err(Error::Structure(format!(
            "first argument is not divergence-free: defect {div_defect:.3e} vs scale {f_scale:.3e}"
        )));
    }
    let mut curl_energy = 0.0;
    for (a, b, da, db) in [(1usize, 2usize, 1usize, 2usize), (2, 0, 2, 0), (0, 1, 0, 1)] {
        let mut comp = g_spectra[b].derivative(da);
        let mut neg = g_spectra[a].derivative(db);
        neg.coeffs_mut().iter_mut().for_each(|c| *c = -*c);
        comp.add_assign(&neg);
        curl_energy += comp.energy();
    }
    let curl_defect = curl_energy.sqrt();
    let g_scale = jacobian_scale(&g_spectra);
    if curl_defect > SOLENOID_TOL * g_scale {
        return Err(Error::Structure(format!(
            "second argument is not curl-free: defect {curl_defect:.3e} vs scale {g_scale:.3e}"
        )));
    }

    // Dot product via one padded pass: multiply-accumulate the component
    // products on the 3/2 grid, then fold back once.
    let mut padded_dot: Vec<f64> = Vec::new();
    for (fs, gs) in f_spectra.iter().zip(g_spectra.iter()) {
        let fp = padded_samples(fs);
        let gp = padded_samples(gs);
        if padded_dot.is_empty() {
            padded_dot = vec![0.0; fp.len()];
        }
        for ((acc, a), b) in padded_dot.iter_mut().zip(fp.iter()).zip(gp.iter()) {
            *acc += a * b;
        }
    }
    let dot_spec = truncate_padded(f.grid(), &padded_dot);
    Ok(DivCurlParts {
        dot_spec,
        f_spectra,
        g_spectra,
    })
}

pub(crate) fn divcurl_lhs_from_parts(parts: &DivCurlParts, s: f64) -> Result<DivCurlLhs> {
    if !(s > -1.0) {
        return Err(Error::Argument(format!(
            "div-curl order must exceed -1, got {s}"
        )));
    }
    let mut spec = parts.dot_spec.clone();
    let mut removed_mean = 0.0;
    if s <= 0.0 {
        removed_mean = spec.zero_mode().norm();
        spec.coeffs_mut()[0] = Default::default();
    }
    let rough = crate::lp::fractional_laplacian_spec(&spec, s)?;
    let hardy = crate::norms::hardy_norm_spec(&rough, spec.grid().block_range())?;
    Ok(DivCurlLhs {
        value: hardy.value,
        removed_mean,
    })
}

/// Right side of the div-curl estimate at `p1 = p2 = 2`, evaluated by
/// Parseval sums over the cached spectra; no further transforms. The radial
/// weight `|xi|^{2s}` is tabulated over the integer values of `|k|^2`.
pub(crate) fn divcurl_rhs_l2_from_parts(parts: &DivCurlParts, s: f64) -> DivCurlRhs {
    let grid = parts.dot_spec.grid();
    let fu = grid.freq_unit();
    let half = grid.points_per_axis() / 2;
    let mut table = vec![0.0f64; 3 * half * half + 1];
    for (nsq, w) in table.iter_mut().enumerate().skip(1) {
        *w = (fu * fu * nsq as f64).powf(s);
    }
    let weighted_energy = |spectra: &[SpectralField]| -> (f64, f64) {
        let mut plain = 0.0;
        let mut weighted = 0.0;
        for spec in spectra {
            spec.visit_modes(|_, sk, c| {
                let nsq = sk.iter().map(|&k| (k * k) as usize).sum::<usize>();
                let e = c.norm_sqr();
                plain += e;
                weighted += table[nsq] * e;
            });
        }
        (plain.sqrt(), weighted.sqrt())
    };
    let (f_leb, f_sob) = weighted_energy(&parts.f_spectra);
    let (g_leb, g_sob) = weighted_energy(&parts.g_spectra);
    let first = f_sob * g_leb;
    let second = f_leb * g_sob;
    DivCurlRhs {
        sum_form: first + second,
        min_form: first.min(second),
    }
}

/// Both right-hand-side forms of the div-curl estimate; the caller picks the
/// min form for `-1 < s <= 0` and the sum form otherwise.
#[derive(Debug, Clone, Copy)]
pub struct DivCurlRhs {
    pub sum_form: f64,
    pub min_form: f64,
}

/// `|f|_q` of the pointwise Euclidean magnitude.
pub fn vector_lebesgue(v: &VectorField, q: f64) -> Result<f64> {
    lebesgue_norm(&v.magnitude(), q)
}

/// Magnitude `L^q` norm of the componentwise `|grad|^s v`.
pub fn vector_sobolev(v: &VectorField, s: f64, q: f64) -> Result<f64> {
    let comps = v
        .components()
        .iter()
        .map(|c| crate::lp::fractional_laplacian(c, s))
        .collect::<Result<Vec<_>>>()?;
    vector_lebesgue(&VectorField::new(comps)?, q)
}

pub fn divcurl_rhs(
    f: &VectorField,
    g: &VectorField,
    s: f64,
    p1: f64,
    p2: f64,
) -> Result<DivCurlRhs> {
    for p in [p1, p2] {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Argument(format!(
                "integrability exponents must lie in (1, inf), got {p}"
            )));
        }
    }
    let p1c = p1 / (p1 - 1.0);
    let p2c = p2 / (p2 - 1.0);
    let first = vector_sobolev(f, s, p1)? * vector_lebesgue(g, p1c)?;
    let second = vector_lebesgue(f, p2c)? * vector_sobolev(g, s, p2)?;
    Ok(DivCurlRhs {
        sum_form: first + second,
        min_form: first.min(second),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::grid::Grid;
    use crate::lp::fractional_laplacian;
    use crate::norms::hardy_norm;

    #[test]
    fn shear_flow_has_no_pressure() {
        let g = Grid::standard(2, 64).unwrap();
        let u = VectorField::new(vec![
            RealField::from_fn(&g, |x| x[1].sin()),
            RealField::zeros(&g),
        ])
        .unwrap();
        for formula in [
            PressureFormula::DivOfAdvection,
            PressureFormula::DoubleDivergence,
            PressureFormula::GradientContraction,
        ] {
            let p = pressure(&u, formula).unwrap();
            assert!(p.max_abs() < 1e-12, "{formula:?}");
        }
    }

    #[test]
    fn taylor_green_pressure_is_analytic() {
        let g = Grid::standard(2, 256).unwrap();
        let u = VectorField::new(vec![
            RealField::from_fn(&g, |x| x[0].sin() * x[1].cos()),
            RealField::from_fn(&g, |x| -x[0].cos() * x[1].sin()),
        ])
        .unwrap();
        let want = RealField::from_fn(&g, |x| ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) / 4.0);
        for formula in [
            PressureFormula::DivOfAdvection,
            PressureFormula::DoubleDivergence,
            PressureFormula::GradientContraction,
        ] {
            let p = pressure(&u, formula).unwrap();
            let err = p.sub(&want).max_abs();
            assert!(err < 1e-10, "{formula:?}: {err}");
        }
    }

    #[test]
    fn formulas_agree_on_random_solenoidal_fields() {
        for (dim, n) in [(2usize, 64usize), (3, 32)] {
            let g = Grid::standard(dim, n).unwrap();
            for seed in 0..5u64 {
                let u = gen::divergence_free(&g, (n / 8) as f64, seed).unwrap();
                let a = pressure(&u, PressureFormula::DivOfAdvection).unwrap();
                let b = pressure(&u, PressureFormula::DoubleDivergence).unwrap();
                let c = pressure(&u, PressureFormula::GradientContraction).unwrap();
                let scale = b.l2().max(1e-300);
                assert!(a.sub(&b).l2() < 1e-10 * scale, "dim {dim} seed {seed}");
                assert!(c.sub(&b).l2() < 1e-10 * scale, "dim {dim} seed {seed}");
            }
        }
    }

    #[test]
    fn non_solenoidal_input_is_rejected() {
        let g = Grid::standard(2, 64).unwrap();
        let u = VectorField::new(vec![
            RealField::from_fn(&g, |x| x[0].sin()),
            RealField::zeros(&g),
        ])
        .unwrap();
        assert!(matches!(
            pressure(&u, PressureFormula::DoubleDivergence),
            Err(Error::Solenoidality { .. })
        ));
    }

    #[test]
    fn minus_laplacian_of_pressure_reproduces_momentum_flux() {
        let g = Grid::standard(2, 128).unwrap();
        let u = gen::divergence_free(&g, 8.0, 11).unwrap();
        let p = pressure(&u, PressureFormula::DoubleDivergence).unwrap();
        let lhs = fractional_laplacian(&p, 2.0).unwrap();
        let mut rhs = SpectralField::zeros(&g);
        for l in 0..2 {
            for k in 0..2 {
                let w = dealiased_product(u.component(l), u.component(k)).unwrap();
                rhs.add_assign(&w.to_spectral().derivative(l).derivative(k));
            }
        }
        let mut rhs = rhs.to_real_unchecked();
        let m = rhs.mean();
        for v in rhs.samples_mut() {
            *v -= m;
        }
        let err = lhs.sub(&rhs).l2();
        assert!(err < 1e-10 * rhs.l2(), "defect {err}");
    }

    #[test]
    fn bilinear_form_properties() {
        let g = Grid::standard(2, 64).unwrap();
        let u = gen::divergence_free(&g, 8.0, 3).unwrap();
        let v = gen::divergence_free(&g, 8.0, 4).unwrap();

        let zero = VectorField::zeros(&g);
        assert_eq!(bilinear_pressure(&u, &zero).unwrap().max_abs(), 0.0);

        // B(u, u) = -pressure(u)
        let b = bilinear_pressure(&u, &u).unwrap();
        let mut p = pressure(&u, PressureFormula::DoubleDivergence).unwrap();
        p.scale(-1.0);
        assert!(b.sub(&p).max_abs() < 1e-12 * p.max_abs().max(1.0));

        // the symmetrized form does not depend on slot order
        let mut s1 = bilinear_pressure(&u, &v).unwrap();
        s1.add_assign(&bilinear_pressure(&v, &u).unwrap());
        let mut s2 = bilinear_pressure(&v, &u).unwrap();
        s2.add_assign(&bilinear_pressure(&u, &v).unwrap());
        assert_eq!(s1.samples(), s2.samples());

        // linearity in the first slot
        let mut lin = VectorField::zeros(&g);
        for a in 0..2 {
            let mut c = u.component(a).clone();
            c.scale(0.5);
            c.add_assign(v.component(a));
            lin.components_mut()[a] = c;
        }
        let whole = bilinear_pressure(&lin, &u).unwrap();
        let mut parts = bilinear_pressure(&u, &u).unwrap();
        parts.scale(0.5);
        parts.add_assign(&bilinear_pressure(&v, &u).unwrap());
        assert!(whole.sub(&parts).max_abs() < 1e-12 * whole.max_abs().max(1.0));
    }

    #[test]
    fn divcurl_lhs_basics() {
        let g = Grid::standard(3, 32).unwrap();
        let f = gen::divergence_free(&g, 4.0, 5).unwrap();
        let w = gen::curl_free(&g, 4.0, 6).unwrap();

        let zero = VectorField::zeros(&g);
        assert_eq!(divcurl_lhs(&zero, &w, 0.5).unwrap().value, 0.0);

        // s = 0 reduces to the Hardy norm of the mean-free product
        let at_zero = divcurl_lhs(&f, &w, 0.0).unwrap();
        let mut dot = RealField::zeros(&g);
        for a in 0..3 {
            dot.add_assign(&dealiased_product(f.component(a), w.component(a)).unwrap());
        }
        let m = dot.mean();
        for v in dot.samples_mut() {
            *v -= m;
        }
        let frac = fractional_laplacian(&dot, 0.0).unwrap();
        let want = hardy_norm(&frac, g.block_range()).unwrap().value;
        assert_eq!(at_zero.value, want);
        assert!((at_zero.removed_mean - m.abs()).abs() < 1e-15);

        // wrong dimension and constraint violations are rejected
        let g2 = Grid::standard(2, 32).unwrap();
        let f2 = gen::divergence_free(&g2, 4.0, 5).unwrap();
        assert!(matches!(
            divcurl_lhs(&f2, &f2, 0.5),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            divcurl_lhs(&w, &w, 0.5),
            Err(Error::Structure(_))
        ));
        assert!(matches!(
            divcurl_lhs(&f, &f, 0.5),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn divcurl_lhs_matches_definition_on_single_modes() {
        let g = Grid::standard(3, 32).unwrap();
        // irrotational g from a single-mode potential; solenoidal f on a
        // disjoint frequency
        let w = {
            let psi = RealField::from_fn(&g, |x| (2.0 * x[0]).sin());
            crate::field::gradient(&psi)
        };
        let f = VectorField::new(vec![
            RealField::from_fn(&g, |x| (3.0 * x[2]).cos()),
            RealField::zeros(&g),
            RealField::zeros(&g),
        ])
        .unwrap();
        let got = divcurl_lhs(&f, &w, 0.5).unwrap();
        let mut dot = RealField::zeros(&g);
        for a in 0..3 {
            dot.add_assign(&dealiased_product(f.component(a), w.component(a)).unwrap());
        }
        let frac = fractional_laplacian(&dot, 0.5).unwrap();
        let want = hardy_norm(&frac, g.block_range()).unwrap().value;
        assert_eq!(got.value, want);
    }

    #[test]
    fn divcurl_rhs_assembly_and_scaling() {
        let g = Grid::standard(3, 32).unwrap();
        let f = gen::divergence_free(&g, 4.0, 9).unwrap();
        let w = gen::curl_free(&g, 4.0, 10).unwrap();
        let s = 0.5;
        let rhs = divcurl_rhs(&f, &w, s, 2.0, 2.0).unwrap();
        // hand assembly with conjugate exponent 2
        let first = vector_sobolev(&f, s, 2.0).unwrap() * vector_lebesgue(&w, 2.0).unwrap();
        let second = vector_lebesgue(&f, 2.0).unwrap() * vector_sobolev(&w, s, 2.0).unwrap();
        assert_eq!(rhs.sum_form, first + second);
        assert_eq!(rhs.min_form, first.min(second));

        let mut f2 = f.clone();
        for c in f2.components_mut() {
            c.scale(2.0);
        }
        let doubled = divcurl_rhs(&f2, &w, s, 2.0, 2.0).unwrap();
        assert!((doubled.sum_form - 2.0 * rhs.sum_form).abs() < 1e-14 * rhs.sum_form);
        assert!((doubled.min_form - 2.0 * rhs.min_form).abs() < 1e-14 * rhs.min_form);

        let zero = VectorField::zeros(&g);
        assert_eq!(divcurl_rhs(&zero, &w, s, 2.0, 2.0).unwrap().sum_form, 0.0);
        assert!(divcurl_rhs(&f, &w, s, 1.0, 2.0).is_err());
    }
}
