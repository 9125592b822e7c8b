//! Bony splitting of a pointwise product into low-high, high-low, and
//! comparable-frequency pieces, plus the Leibniz-rule residual it controls.

use crate::error::{Error, Result};
use crate::field::{pointwise_product, RealField, SpectralField};
use crate::lp::{DyadicProfile, HomogeneousSymbol};

/// The three interaction pieces of `f g`. They sum to `f g` minus
/// `low_residue` (the product of the means, the only content below the
/// lowest block).
#[derive(Debug, Clone)]
pub struct ParaproductTriple {
    /// `sum_j P_{<=j-2} f * P_j g`.
    pub low_high: RealField,
    /// `sum_j P_j f * P_{<=j-2} g`.
    pub high_low: RealField,
    /// `sum_j (P_{j-1} + P_j + P_{j+1}) f * P_j g`.
    pub diagonal: RealField,
    /// `mean(f) * mean(g)`.
    pub low_residue: f64,
}

fn low_field(spec: &SpectralField, j: i32) -> RealField {
    let p = DyadicProfile;
    let scale = (2.0f64).powi(j);
    let mut s = spec.clone();
    s.apply_radial(|r| p.low(r / scale));
    s.to_real_unchecked()
}

fn band_field(spec: &SpectralField, j: i32) -> RealField {
    let p = DyadicProfile;
    let scale = (2.0f64).powi(j);
    let mut s = spec.clone();
    s.apply_radial(|r| p.band(r / scale));
    s.to_real_unchecked()
}

fn fat_field(spec: &SpectralField, j: i32) -> RealField {
    let p = DyadicProfile;
    let mut s = spec.clone();
    s.apply_radial(|r| {
        let mut acc = 0.0;
        for i in (j - 1)..=(j + 1) {
            acc += p.band(r / (2.0f64).powi(i));
        }
        acc
    });
    s.to_real_unchecked()
}

/// Split `f g` over the grid's full block range. Products are plain sample
/// products, so the three pieces reassemble the sample product exactly up to
/// `low_residue`; alias hygiene is the caller's business (keep inputs inside
/// the alias-free band).
pub fn paraproduct_split(f: &RealField, g: &RealField) -> Result<ParaproductTriple> {
    f.grid().same_grid(g.grid())?;
    let grid = f.grid().clone();
    let range = grid.block_range();
    let sf = f.to_spectral();
    let sg = g.to_spectral();

    let mut low_high = RealField::zeros(&grid);
    let mut high_low = RealField::zeros(&grid);
    let mut diagonal = RealField::zeros(&grid);
    for j in range.iter() {
        let gj = band_field(&sg, j);
        low_high.add_assign(&pointwise_product(&low_field(&sf, j - 2), &gj)?);
        let fj = band_field(&sf, j);
        high_low.add_assign(&pointwise_product(&fj, &low_field(&sg, j - 2))?);
        diagonal.add_assign(&pointwise_product(&fat_field(&sf, j), &gj)?);
    }
    Ok(ParaproductTriple {
        low_high,
        high_low,
        diagonal,
        low_residue: f.mean() * g.mean(),
    })
}

/// `A(fg) - sum_j A(P_{<=j-2} f P_j g) - sum_j A(P_j f P_{<=j-2} g)`: what a
/// naive Leibniz rule misses. Equals `A` applied to the diagonal interaction
/// (constants die in the positive-degree symbol).
pub fn leibniz_residual(
    f: &RealField,
    g: &RealField,
    symbol: &HomogeneousSymbol,
) -> Result<RealField> {
    if !(symbol.degree() > 0.0) {
        return Err(Error::Argument(format!(
            "leibniz residual needs positive symbol degree, got {}",
            symbol.degree()
        )));
    }
    let triple = paraproduct_split(f, g)?;
    let mut rem = pointwise_product(f, g)?;
    let mut neg = triple.low_high;
    neg.scale(-1.0);
    rem.add_assign(&neg);
    let mut neg = triple.high_low;
    neg.scale(-1.0);
    rem.add_assign(&neg);
    crate::lp::apply_symbol(&rem, symbol)
}
