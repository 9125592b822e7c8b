use crate::error::{Error, Result};
use crate::fft::{apply_center_phase, fft_all_axes};
use crate::grid::GridRef;
use crate::util::{det_sum_by, for_each_index};
use num_complex::Complex64;
use rustfft::FftDirection;

/// Relative tolerance for the Hermitian symmetry check on inverse transforms.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Real scalar field sampled on a periodic grid, row-major.
#[derive(Debug, Clone)]
pub struct RealField {
    grid: GridRef,
    samples: Vec<f64>,
}

/// Fourier coefficients of a field in FFT index order. The represented
/// function is `f(x) = sum_k c_k e^{i xi_k . x}`; a constant field 1 has
/// `c_0 = 1` and `sum_k |c_k|^2` equals the mean of `|f|^2`.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: GridRef,
    coeffs: Vec<Complex64>,
}

impl RealField {
    pub fn zeros(grid: &GridRef) -> Self {
        RealField {
            grid: grid.clone(),
            samples: vec![0.0; grid.samples()],
        }
    }

    pub fn from_samples(grid: &GridRef, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.samples() {
            return Err(Error::Argument(format!(
                "sample count {} does not match grid size {}",
                samples.len(),
                grid.samples()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("samples contain non-finite values".into()));
        }
        Ok(RealField {
            grid: grid.clone(),
            samples,
        })
    }

    /// Sample `f` at every grid point; coordinates are passed per axis.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: &GridRef, f: F) -> Self {
        let d = grid.dim();
        let mut samples = vec![0.0; grid.samples()];
        let mut x = [0.0f64; 4];
        for_each_index(grid.points_per_axis(), d, |flat, idx| {
            for a in 0..d {
                x[a] = grid.coord(idx[a]);
            }
            samples[flat] = f(&x[..d]);
        });
        RealField {
            grid: grid.clone(),
            samples,
        }
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn mean(&self) -> f64 {
        det_sum_by(self.samples.len(), |i| self.samples[i]) / self.samples.len() as f64
    }

    /// `(mean |f|^2)^{1/2}`, the volume-normalized L2 norm.
    pub fn l2(&self) -> f64 {
        (det_sum_by(self.samples.len(), |i| self.samples[i] * self.samples[i])
            / self.samples.len() as f64)
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Sample at x = 0 (a grid point on every supported grid).
    pub fn value_at_origin(&self) -> f64 {
        self.samples[self.grid.origin_flat()]
    }

    pub fn to_spectral(&self) -> SpectralField {
        let mut buf: Vec<Complex64> = self
            .samples
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        let n = self.grid.points_per_axis();
        fft_all_axes(&mut buf, n, self.grid.dim(), FftDirection::Forward);
        apply_center_phase(&mut buf, n, self.grid.dim());
        let scale = 1.0 / self.grid.samples() as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        SpectralField {
            grid: self.grid.clone(),
            coeffs: buf,
        }
    }

    pub fn scale(&mut self, a: f64) {
        for v in self.samples.iter_mut() {
            *v *= a;
        }
    }

    pub fn add_assign(&mut self, other: &RealField) {
        assert_eq!(self.samples.len(), other.samples.len());
        for (a, b) in self.samples.iter_mut().zip(other.samples.iter()) {
            *a += b;
        }
    }

    pub fn axpy(&mut self, a: f64, other: &RealField) {
        assert_eq!(self.samples.len(), other.samples.len());
        for (s, o) in self.samples.iter_mut().zip(other.samples.iter()) {
            *s += a * o;
        }
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        let mut out = self.clone();
        for (a, b) in out.samples.iter_mut().zip(other.samples.iter()) {
            *a -= b;
        }
        out
    }
}

impl SpectralField {
    pub fn zeros(grid: &GridRef) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![Complex64::default(); grid.samples()],
        }
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    /// `sum_k |c_k|^2`; equals `mean |f|^2` by the transform normalization.
    pub fn energy(&self) -> f64 {
        det_sum_by(self.coeffs.len(), |i| self.coeffs[i].norm_sqr())
    }

    pub fn zero_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Largest Hermitian symmetry defect `|c(-k) - conj(c(k))|`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.grid.points_per_axis();
        let d = self.grid.dim();
        let mut defect = 0.0f64;
        let mut neg = [0usize; 4];
        for_each_index(n, d, |flat, idx| {
            for a in 0..d {
                neg[a] = (n - idx[a]) % n;
            }
            let nflat = self.grid.encode(&neg[..d]);
            if nflat >= flat {
                let diff = (self.coeffs[nflat] - self.coeffs[flat].conj()).norm();
                if diff > defect {
                    defect = diff;
                }
            }
        });
        defect
    }

    /// Inverse transform with the Hermitian symmetry check.
    pub fn to_real(&self) -> Result<RealField> {
        let defect = self.symmetry_defect();
        let scale = self.max_abs().max(1e-300);
        if defect > SYMMETRY_TOL * scale.max(1.0) {
            return Err(Error::Symmetry {
                defect,
                tolerance: SYMMETRY_TOL * scale.max(1.0),
            });
        }
        Ok(self.to_real_unchecked())
    }

    /// Inverse transform for spectra that are Hermitian by construction
    /// (real-even or imaginary-odd multipliers applied to checked input).
    pub fn to_real_unchecked(&self) -> RealField {
        let mut buf = self.coeffs.clone();
        let n = self.grid.points_per_axis();
        apply_center_phase(&mut buf, n, self.grid.dim());
        fft_all_axes(&mut buf, n, self.grid.dim(), FftDirection::Inverse);
        RealField {
            grid: self.grid.clone(),
            samples: buf.iter().map(|c| c.re).collect(),
        }
    }

    /// Visit every mode: `f(flat, signed_k, coeff)` with `signed_k` the
    /// integer lattice indices (frequency = signed_k * 2*pi/L).
    pub fn for_each_mode<F: FnMut(usize, &[i64], &mut Complex64)>(&mut self, mut f: F) {
        let n = self.grid.points_per_axis();
        let d = self.grid.dim();
        let grid = self.grid.clone();
        let mut sk = [0i64; 4];
        for_each_index(n, d, |flat, idx| {
            for a in 0..d {
                sk[a] = grid.signed_index(idx[a]);
            }
            f(flat, &sk[..d], &mut self.coeffs[flat]);
        });
    }

    /// Read-only mode visitor.
    pub fn visit_modes<F: FnMut(usize, &[i64], Complex64)>(&self, mut f: F) {
        let n = self.grid.points_per_axis();
        let d = self.grid.dim();
        let mut sk = [0i64; 4];
        for_each_index(n, d, |flat, idx| {
            for a in 0..d {
                sk[a] = self.grid.signed_index(idx[a]);
            }
            f(flat, &sk[..d], self.coeffs[flat]);
        });
    }

    /// Multiply by a real radial function of |xi|.
    pub fn apply_radial<F: Fn(f64) -> f64>(&mut self, f: F) {
        let fu = self.grid.freq_unit();
        self.for_each_mode(|_, sk, c| {
            let mut s = 0.0;
            for &k in sk {
                s += (k * k) as f64;
            }
            *c *= f(s.sqrt() * fu);
        });
    }

    /// Derivative along `axis`: multiplier `i*xi_axis`, zero on the Nyquist
    /// index where the signed frequency has no conjugate partner.
    pub fn derivative(&self, axis: usize) -> SpectralField {
        assert!(axis < self.grid.dim());
        let mut out = self.clone();
        let half = (out.grid.points_per_axis() / 2) as i64;
        let fu = out.grid.freq_unit();
        out.for_each_mode(|_, sk, c| {
            let k = sk[axis];
            let xi = if k == -half { 0.0 } else { k as f64 * fu };
            *c *= Complex64::new(0.0, xi);
        });
        out
    }

    pub fn add_assign(&mut self, other: &SpectralField) {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += b;
        }
    }

    /// Energy fraction outside the radial ball |xi| <= cutoff.
    pub fn energy_beyond(&self, cutoff: f64) -> f64 {
        let fu = self.grid.freq_unit();
        let c2 = (cutoff / fu) * (cutoff / fu);
        let mut beyond = 0.0;
        let mut total = 0.0;
        self.visit_modes(|_, sk, c| {
            let mut s = 0.0;
            for &k in sk {
                s += (k * k) as f64;
            }
            let e = c.norm_sqr();
            total += e;
            if s > c2 {
                beyond += e;
            }
        });
        if total == 0.0 {
            0.0
        } else {
            beyond / total
        }
    }
}

/// Forward transform, normalized so a constant field 1 maps to `c_0 = 1`.
pub fn forward_transform(f: &RealField) -> SpectralField {
    f.to_spectral()
}

/// Inverse transform; rejects spectra whose Hermitian defect exceeds
/// `1e-10` relative to the largest coefficient.
pub fn inverse_transform(s: &SpectralField) -> Result<RealField> {
    s.to_real()
}

/// Spectral derivative of a sampled field.
pub fn partial_derivative(f: &RealField, axis: usize) -> Result<RealField> {
    if axis >= f.grid().dim() {
        return Err(Error::Argument(format!(
            "axis {axis} out of bounds for dimension {}",
            f.grid().dim()
        )));
    }
    Ok(f.to_spectral().derivative(axis).to_real_unchecked())
}

/// Sample-wise product. No dealiasing: the caller either knows the factors'
/// bands fit under Nyquist or wants the raw grid product.
pub fn pointwise_product(f: &RealField, g: &RealField) -> Result<RealField> {
    f.grid().same_grid(g.grid())?;
    let mut out = f.clone();
    for (a, b) in out.samples.iter_mut().zip(g.samples.iter()) {
        *a *= b;
    }
    Ok(out)
}

/// Padded grid length for 3/2-rule dealiasing.
pub fn padded_len(n: usize) -> usize {
    3 * n / 2
}

/// Zero-pad a spectrum onto the 3/2 grid and return its samples there.
pub fn padded_samples(s: &SpectralField) -> Vec<f64> {
    let n = s.grid.points_per_axis();
    let d = s.grid.dim();
    let m = padded_len(n);
    let mut buf = vec![Complex64::default(); m.pow(d as u32)];
    let half = n / 2;
    let mut midx = [0usize; 4];
    for_each_index(n, d, |flat, idx| {
        for a in 0..d {
            let k = if idx[a] < half {
                idx[a] as i64
            } else {
                idx[a] as i64 - n as i64
            };
            midx[a] = k.rem_euclid(m as i64) as usize;
        }
        let mut mflat = 0usize;
        for a in 0..d {
            mflat = mflat * m + midx[a];
        }
        buf[mflat] = s.coeffs[flat];
    });
    apply_center_phase(&mut buf, m, d);
    fft_all_axes(&mut buf, m, d, FftDirection::Inverse);
    buf.iter().map(|c| c.re).collect()
}

/// Transform a sample product on the 3/2 grid back and truncate to the
/// original band. Nyquist slots are zeroed: they sit outside the alias-free
/// guarantee and have no Hermitian partner on the coarse grid.
pub fn truncate_padded(grid: &GridRef, padded: &[f64]) -> SpectralField {
    let n = grid.points_per_axis();
    let d = grid.dim();
    let m = padded_len(n);
    assert_eq!(padded.len(), m.pow(d as u32));
    let mut buf: Vec<Complex64> = padded.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_all_axes(&mut buf, m, d, FftDirection::Forward);
    apply_center_phase(&mut buf, m, d);
    let scale = 1.0 / buf.len() as f64;
    let mut out = SpectralField::zeros(grid);
    let half = (n / 2) as i64;
    let mut midx = [0usize; 4];
    for_each_index(n, d, |flat, idx| {
        let mut nyquist = false;
        for a in 0..d {
            let k = if idx[a] < n / 2 {
                idx[a] as i64
            } else {
                idx[a] as i64 - n as i64
            };
            if k == -half {
                nyquist = true;
            }
            midx[a] = k.rem_euclid(m as i64) as usize;
        }
        if nyquist {
            return;
        }
        let mut mflat = 0usize;
        for a in 0..d {
            mflat = mflat * m + midx[a];
        }
        out.coeffs[flat] = buf[mflat] * scale;
    });
    out
}

/// Product with 3/2-rule zero-padding: exact on the retained band whenever
/// each factor is band-limited under Nyquist.
pub fn dealiased_product(f: &RealField, g: &RealField) -> Result<RealField> {
    f.grid().same_grid(g.grid())?;
    let fs = padded_samples(&f.to_spectral());
    let gs = padded_samples(&g.to_spectral());
    let prod: Vec<f64> = fs.iter().zip(gs.iter()).map(|(a, b)| a * b).collect();
    Ok(truncate_padded(f.grid(), &prod).to_real_unchecked())
}

/// Vector field: one real component per spatial axis.
#[derive(Debug, Clone)]
pub struct VectorField {
    components: Vec<RealField>,
}

impl VectorField {
    pub fn new(components: Vec<RealField>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Argument("vector field needs components".into()));
        }
        let grid = components[0].grid().clone();
        if components.len() != grid.dim() {
            return Err(Error::Argument(format!(
                "expected {} components, got {}",
                grid.dim(),
                components.len()
            )));
        }
        for c in &components {
            grid.same_grid(c.grid())?;
        }
        Ok(VectorField { components })
    }

    pub fn zeros(grid: &GridRef) -> Self {
        VectorField {
            components: (0..grid.dim()).map(|_| RealField::zeros(grid)).collect(),
        }
    }

    pub fn grid(&self) -> &GridRef {
        self.components[0].grid()
    }

    pub fn component(&self, a: usize) -> &RealField {
        &self.components[a]
    }

    pub fn components(&self) -> &[RealField] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [RealField] {
        &mut self.components
    }

    /// `(sum_a |v_a|_2^2)^{1/2}`.
    pub fn l2(&self) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let v = c.l2();
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Pointwise Euclidean magnitude as a scalar field.
    pub fn magnitude(&self) -> RealField {
        let mut out = RealField::zeros(self.grid());
        for c in &self.components {
            for (o, v) in out.samples.iter_mut().zip(c.samples.iter()) {
                *o += v * v;
            }
        }
        for o in out.samples.iter_mut() {
            *o = o.sqrt();
        }
        out
    }
}

/// Divergence via spectral derivatives.
pub fn divergence(v: &VectorField) -> RealField {
    let mut acc = SpectralField::zeros(v.grid());
    for (a, comp) in v.components().iter().enumerate() {
        acc.add_assign(&comp.to_spectral().derivative(a));
    }
    acc.to_real_unchecked()
}

/// Gradient of a scalar field.
pub fn gradient(f: &RealField) -> VectorField {
    let s = f.to_spectral();
    let comps = (0..f.grid().dim())
        .map(|a| s.derivative(a).to_real_unchecked())
        .collect();
    VectorField { components: comps }
}

/// Curl of a 3-D vector field via spectral derivatives.
pub fn curl(v: &VectorField) -> Result<VectorField> {
    if v.grid().dim() != 3 {
        return Err(Error::Argument(format!(
            "curl needs a 3-D field, got dimension {}",
            v.grid().dim()
        )));
    }
    let specs: Vec<SpectralField> = v.components().iter().map(|c| c.to_spectral()).collect();
    let comp = |a: usize, b: usize, da: usize, db: usize| {
        let mut s = specs[b].derivative(da);
        let mut neg = specs[a].derivative(db);
        neg.coeffs.iter_mut().for_each(|c| *c = -*c);
        s.add_assign(&neg);
        s.to_real_unchecked()
    };
    VectorField::new(vec![
        comp(1, 2, 1, 2), // d2 v3 - d3 v2
        comp(2, 0, 2, 0), // d3 v1 - d1 v3
        comp(0, 1, 0, 1), // d1 v2 - d2 v1
    ])
}

/// `|grad v|_2 = (sum_{a,l} |d_a v_l|_2^2)^{1/2}`, the scale used by the
/// solenoidality precondition.
pub fn gradient_scale(v: &VectorField) -> f64 {
    let mut s = 0.0;
    for comp in v.components() {
        let spec = comp.to_spectral();
        for a in 0..v.grid().dim() {
            let d = spec.derivative(a);
            s += d.energy();
        }
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Direct-summation DFT: O(M^2), no FFT machinery shared with the
    /// implementation path.
    fn dft_oracle(f: &RealField) -> Vec<Complex64> {
        let g = f.grid().clone();
        let d = g.dim();
        let total = g.samples();
        let mut out = vec![Complex64::default(); total];
        let mut kidx = vec![0usize; d];
        let mut xidx = vec![0usize; d];
        for kf in 0..total {
            g.decode(kf, &mut kidx);
            let mut acc = Complex64::default();
            for xf in 0..total {
                g.decode(xf, &mut xidx);
                let mut phase = 0.0;
                for a in 0..d {
                    phase -= g.freq(kidx[a]) * g.coord(xidx[a]);
                }
                acc += f.samples()[xf] * Complex64::new(phase.cos(), phase.sin());
            }
            out[kf] = acc / total as f64;
        }
        out
    }

    fn random_field(grid: &GridRef, seed: u64) -> RealField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..grid.samples())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        RealField::from_samples(grid, samples).unwrap()
    }

    #[test]
    fn constant_maps_to_zero_mode() {
        let g = Grid::standard(2, 16).unwrap();
        let f = RealField::from_fn(&g, |_| 1.0);
        let s = f.to_spectral();
        assert!((s.zero_mode() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let rest: f64 = s.coeffs()[1..].iter().map(|c| c.norm()).sum();
        assert!(rest < 1e-12);
    }

    #[test]
    fn zero_field_round_trips() {
        let g = Grid::standard(2, 8).unwrap();
        let f = RealField::zeros(&g);
        let back = f.to_spectral().to_real().unwrap();
        assert!(back.max_abs() == 0.0);
    }

    #[test]
    fn cosine_hits_unit_modes() {
        let g = Grid::standard(1, 64).unwrap();
        let f = RealField::from_fn(&g, |x| x[0].cos());
        let s = f.to_spectral();
        assert!((s.coeffs()[1] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((s.coeffs()[63] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        let mut other = 0.0f64;
        for (i, c) in s.coeffs().iter().enumerate() {
            if i != 1 && i != 63 {
                other = other.max(c.norm());
            }
        }
        assert!(other < 1e-14);
    }

    #[test]
    fn forward_matches_direct_summation() {
        let g = Grid::standard(2, 8).unwrap();
        let f = random_field(&g, 11);
        let oracle = dft_oracle(&f);
        let s = f.to_spectral();
        for (a, b) in s.coeffs().iter().zip(oracle.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_matches_direct_summation_3d() {
        let g = Grid::standard(3, 8).unwrap();
        let f = random_field(&g, 3);
        let oracle = dft_oracle(&f);
        let s = f.to_spectral();
        for (a, b) in s.coeffs().iter().zip(oracle.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_and_parseval_thousand_fields() {
        let g = Grid::standard(2, 16).unwrap();
        for seed in 0..1000u64 {
            let f = random_field(&g, seed);
            let s = f.to_spectral();
            let mean_sq = det_sum_by(f.samples().len(), |i| f.samples()[i] * f.samples()[i])
                / f.samples().len() as f64;
            assert!((s.energy() - mean_sq).abs() <= 1e-10 * mean_sq.max(1e-30));
            let back = s.to_real().unwrap();
            let err = back.sub(&f).max_abs();
            assert!(err < 1e-12, "roundtrip failed for seed {seed}: {err}");
        }
    }

    #[test]
    fn inverse_rejects_asymmetric_spectrum() {
        let g = Grid::standard(1, 16).unwrap();
        let mut s = SpectralField::zeros(&g);
        s.coeffs_mut()[3] = Complex64::new(1.0, 0.5);
        let err = s.to_real().unwrap_err();
        assert!(matches!(err, Error::Symmetry { .. }));
    }

    #[test]
    fn derivative_of_cosine() {
        let g = Grid::standard(2, 64).unwrap();
        let f = RealField::from_fn(&g, |x| x[0].cos());
        let d = partial_derivative(&f, 0).unwrap();
        let want = RealField::from_fn(&g, |x| -x[0].sin());
        assert!(d.sub(&want).max_abs() < 1e-12);
        let d2 = partial_derivative(&f, 1).unwrap();
        assert!(d2.max_abs() < 1e-13);
    }

    #[test]
    fn derivative_matches_high_order_differences() {
        // 8th-order centered stencil; independent of the spectral path.
        let g = Grid::standard(1, 128).unwrap();
        let f = RealField::from_fn(&g, |x| {
            (x[0]).sin() + 0.5 * (3.0 * x[0]).cos() - 0.2 * (4.0 * x[0]).sin()
        });
        let d = partial_derivative(&f, 0).unwrap();
        let n = 128i64;
        let h = g.step();
        let wts = [
            (1i64, 4.0 / 5.0),
            (2, -1.0 / 5.0),
            (3, 4.0 / 105.0),
            (4, -1.0 / 280.0),
        ];
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut acc = 0.0;
            for (off, w) in wts {
                let ip = ((i + off).rem_euclid(n)) as usize;
                let im = ((i - off).rem_euclid(n)) as usize;
                acc += w * (f.samples()[ip] - f.samples()[im]);
            }
            worst = worst.max((acc / h - d.samples()[i as usize]).abs());
        }
        assert!(worst < 1e-6, "stencil disagreement {worst}");

        let g2 = Grid::standard(1, 256).unwrap();
        let f2 = RealField::from_fn(&g2, |x| {
            (x[0]).sin() + 0.5 * (3.0 * x[0]).cos() - 0.2 * (4.0 * x[0]).sin()
        });
        let d2 = partial_derivative(&f2, 0).unwrap();
        let h2 = g2.step();
        let mut worst2 = 0.0f64;
        for i in 0..256i64 {
            let mut acc = 0.0;
            for (off, w) in wts {
                let ip = ((i + off).rem_euclid(256)) as usize;
                let im = ((i - off).rem_euclid(256)) as usize;
                acc += w * (f2.samples()[ip] - f2.samples()[im]);
            }
            worst2 = worst2.max((acc / h2 - d2.samples()[i as usize]).abs());
        }
        assert!(worst2 < 1e-8, "stencil order not reached: {worst2}");
    }

    #[test]
    fn product_identities() {
        let g = Grid::standard(1, 64).unwrap();
        let f = RealField::from_fn(&g, |x| x[0].cos());
        let z = RealField::zeros(&g);
        assert!(pointwise_product(&f, &z).unwrap().max_abs() == 0.0);
        let sq = pointwise_product(&f, &f).unwrap();
        let want = RealField::from_fn(&g, |x| 0.5 * (1.0 + (2.0 * x[0]).cos()));
        assert!(sq.sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn dealiased_product_matches_exact_band() {
        // Band-limited factors whose product still fits under Nyquist: the
        // dealiased product must agree with the raw one.
        let g = Grid::standard(2, 32).unwrap();
        let f = RealField::from_fn(&g, |x| (3.0 * x[0]).cos() + (2.0 * x[1]).sin());
        let h = RealField::from_fn(&g, |x| (4.0 * x[0] + x[1]).cos());
        let raw = pointwise_product(&f, &h).unwrap();
        let de = dealiased_product(&f, &h).unwrap();
        assert!(raw.sub(&de).max_abs() < 1e-12);
    }

    #[test]
    fn dealiased_product_removes_folded_modes() {
        // cos(kx)^2 with 2k beyond Nyquist: raw product aliases onto the
        // grid, the dealiased product keeps only the retained-band content.
        let g = Grid::standard(1, 32).unwrap();
        let f = RealField::from_fn(&g, |x| (12.0 * x[0]).cos());
        let de = dealiased_product(&f, &f).unwrap();
        let want = RealField::from_fn(&g, |_| 0.5); // the cos(24x) half is truncated
        assert!(de.sub(&want).max_abs() < 1e-12);
        let raw = pointwise_product(&f, &f).unwrap();
        let raw_spec = raw.to_spectral();
        // raw product folds cos(24x)/2 onto modes +-8 with weight 1/4
        assert!((raw_spec.coeffs()[8].norm() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn divergence_of_rotated_gradient_vanishes() {
        let g = Grid::standard(2, 32).unwrap();
        let phi = RealField::from_fn(&g, |x| (2.0 * x[0]).sin() * (3.0 * x[1]).cos());
        let grad = gradient(&phi);
        let perp = VectorField::new(vec![
            {
                let mut c = grad.component(1).clone();
                c.scale(-1.0);
                c
            },
            grad.component(0).clone(),
        ])
        .unwrap();
        assert!(divergence(&perp).max_abs() < 1e-12);
        let sheared = VectorField::new(vec![
            RealField::from_fn(&g, |x| x[0].sin()),
            RealField::zeros(&g),
        ])
        .unwrap();
        let div = divergence(&sheared);
        let want = RealField::from_fn(&g, |x| x[0].cos());
        assert!(div.sub(&want).max_abs() < 1e-12);
    }
}
