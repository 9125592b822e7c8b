//! Reproducible random fields: band-limited spectra with power-law decay,
//! turned into solenoidal or irrotational vector fields through potentials.

use crate::error::{Error, Result};
use crate::field::{RealField, SpectralField, VectorField};
use crate::grid::GridRef;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// splitmix64 step, used to derive independent per-component seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Random band-limited scalar with spectrum `|xi|^{-beta}`, `beta` drawn from
/// `[1, 3)` per seed, random phases, unit L2 norm, zero mean. Modes are drawn
/// in a fixed lattice order, so output is byte-identical for a given
/// `(grid, cutoff, seed)`.
pub fn scalar_field(grid: &GridRef, cutoff: f64, seed: u64) -> Result<RealField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: f64 = rng.random_range(1.0..3.0);
    let n = grid.points_per_axis();
    let d = grid.dim();
    let fu = grid.freq_unit();
    let mut s = SpectralField::zeros(grid);
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
            let amp = r.powf(-beta) * rng.random_range(0.5..1.5);
            let ph = rng.random_range(0.0..std::f64::consts::TAU);
            draws.push((flat, amp * Complex64::new(ph.cos(), ph.sin())));
        }
    });
    if draws.is_empty() {
        return Err(Error::Argument(format!(
            "cutoff {cutoff} leaves no admissible modes"
        )));
    }
    for &(flat, c) in &draws {
        s.coeffs_mut()[flat] = c;
    }
    // conjugate mirror for a real-valued field
    let mut idx = [0usize; 4];
    for &(flat, c) in &draws {
        grid.decode(flat, &mut idx[..d]);
        let mut neg = [0usize; 4];
        for a in 0..d {
            neg[a] = (n - idx[a]) % n;
        }
        let nflat = grid.encode(&neg[..d]);
        s.coeffs_mut()[nflat] = c.conj();
    }
    let mut f = s.to_real()?;
    let norm = f.l2();
    f.scale(1.0 / norm);
    Ok(f)
}

/// Divergence-free velocity: `rot` of a stream function in 2-D, curl of a
/// vector potential in 3-D. Unit L2 norm.
pub fn divergence_free(grid: &GridRef, cutoff: f64, seed: u64) -> Result<VectorField> {
    let v = match grid.dim() {
        2 => {
            let phi = scalar_field(grid, cutoff, seed)?;
            let s = phi.to_spectral();
            let mut d1 = s.derivative(1).to_real_unchecked();
            d1.scale(-1.0);
            let d0 = s.derivative(0).to_real_unchecked();
            VectorField::new(vec![d1, d0])?
        }
        3 => {
            let comps: Vec<SpectralField> = (0..3u64)
                .map(|a| {
                    scalar_field(grid, cutoff, mix(seed).wrapping_add(mix(a + 1)))
                        .map(|f| f.to_spectral())
                })
                .collect::<Result<_>>()?;
            let pair = |b: usize, db: usize, a: usize, da: usize| {
                let mut s = comps[b].derivative(db);
                let mut neg = comps[a].derivative(da);
                for c in neg.coeffs_mut() {
                    *c = -*c;
                }
                s.add_assign(&neg);
                s.to_real_unchecked()
            };
            VectorField::new(vec![
                pair(2, 1, 1, 2),
                pair(0, 2, 2, 0),
                pair(1, 0, 0, 1),
            ])?
        }
        d => {
            return Err(Error::Argument(format!(
                "no solenoidal generator for dimension {d}"
            )))
        }
    };
    normalize(v)
}

/// Curl-free field: gradient of a random scalar potential. Unit L2 norm.
pub fn curl_free(grid: &GridRef, cutoff: f64, seed: u64) -> Result<VectorField> {
    let psi = scalar_field(grid, cutoff, seed)?;
    let s = psi.to_spectral();
    let comps = (0..grid.dim())
        .map(|a| s.derivative(a).to_real_unchecked())
        .collect();
    normalize(VectorField::new(comps)?)
}

fn normalize(mut v: VectorField) -> Result<VectorField> {
    let norm = v.l2();
    if norm == 0.0 {
        return Err(Error::Argument("generated field is identically zero".into()));
    }
    for c in v.components_mut() {
        c.scale(1.0 / norm);
    }
    Ok(v)
}
