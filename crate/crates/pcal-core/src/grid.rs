use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Uniform periodic grid on the torus `[-L/2, L/2)^dim`.
///
/// Samples are stored row-major with axis 0 slowest; the point at
/// multi-index `(i_0, .., i_{d-1})` sits at `x_a = -L/2 + i_a * L/n`.
/// The frequency lattice is `{2*pi*k/L : -n/2 <= k_a < n/2}` in FFT index
/// order, so axis index `i` carries the signed integer `i` for `i < n/2`
/// and `i - n` otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    dim: usize,
    n: usize,
    len_bits: u64,
}

/// Inclusive range of dyadic block indices valid on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRange {
    pub j_min: i32,
    pub j_max: i32,
}

impl BlockRange {
    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    pub fn contains(&self, j: i32) -> bool {
        j >= self.j_min && j <= self.j_max
    }

    pub fn len(&self) -> usize {
        (self.j_max - self.j_min + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.j_max < self.j_min
    }
}

pub type GridRef = Arc<Grid>;

impl Grid {
    /// `n` must be a power of two, `dim` in `1..=4`, `length` positive and finite.
    pub fn new(dim: usize, n: usize, length: f64) -> Result<GridRef> {
        if !(1..=4).contains(&dim) {
            return Err(Error::Config(format!("dimension {dim} outside 1..=4")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "points per axis {n} is not a power of two >= 4"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Config(format!("box length {length} must be positive")));
        }
        // Guard total size; 4096^2 and 256^3 are in scope, 4096^3 is not.
        let total = (n as u128).pow(dim as u32);
        if total > 1 << 28 {
            return Err(Error::Config(format!(
                "grid with {total} samples exceeds the supported size"
            )));
        }
        Ok(Arc::new(Grid {
            dim,
            n,
            len_bits: length.to_bits(),
        }))
    }

    /// Standard box `[-pi, pi)^dim`.
    pub fn standard(dim: usize, n: usize) -> Result<GridRef> {
        Grid::new(dim, n, std::f64::consts::TAU)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        f64::from_bits(self.len_bits)
    }

    pub fn samples(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn step(&self) -> f64 {
        self.length() / self.n as f64
    }

    /// Spacing of the frequency lattice, `2*pi/L`.
    pub fn freq_unit(&self) -> f64 {
        std::f64::consts::TAU / self.length()
    }

    /// Largest represented radial frequency along an axis, `pi*n/L`.
    pub fn nyquist(&self) -> f64 {
        self.freq_unit() * (self.n as f64) / 2.0
    }

    /// Signed lattice integer carried by axis index `i`.
    #[inline]
    pub fn signed_index(&self, i: usize) -> i64 {
        debug_assert!(i < self.n);
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Frequency component for axis index `i`.
    #[inline]
    pub fn freq(&self, i: usize) -> f64 {
        self.signed_index(i) as f64 * self.freq_unit()
    }

    /// Physical coordinate of axis index `i`.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.length() + i as f64 * self.step()
    }

    /// Flat index of the sample at x = 0 (all axis indices n/2).
    pub fn origin_flat(&self) -> usize {
        let mut idx = 0usize;
        for _ in 0..self.dim {
            idx = idx * self.n + self.n / 2;
        }
        idx
    }

    /// Decode a flat row-major index into axis indices.
    #[inline]
    pub fn decode(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.dim).rev() {
            out[a] = flat % self.n;
            flat /= self.n;
        }
    }

    #[inline]
    pub fn encode(&self, idx: &[usize]) -> usize {
        let mut flat = 0usize;
        for &i in idx.iter() {
            flat = flat * self.n + i;
        }
        flat
    }

    /// |xi|^2 at the lattice point with the given axis indices.
    #[inline]
    pub fn freq_norm_sq(&self, idx: &[usize]) -> f64 {
        let u = self.freq_unit();
        let mut s = 0.0;
        for &i in idx. iter() {
            let k = self.signed_index(i) as f64 * u;
            s += k * k;
        }
        s
    }

    /// Valid dyadic block indices: `j_min` is the first block whose support
    /// can meet the lattice, `j_max` the last with support inside the Nyquist
    /// ball, `(7/6)*2^j_max <= pi*n/L`.
    pub fn block_range(&self) -> BlockRange {
        let fu = self.freq_unit();
        // smallest j with (7/6)*2^j > fu, i.e. block support reaches the first shell
        let j_min = ((6.0 / 7.0) * fu).log2().floor() as i32 + 1;
        let j_max = ((6.0 / 7.0) * self.nyquist()).log2().floor() as i32;
        BlockRange { j_min, j_max }
    }

    pub fn validate_block(&self, j: i32) -> Result<()> {
        let r = self.block_range();
        if r.contains(j) {
            Ok(())
        } else {
            Err(Error::Range {
                j,
                j_min: r.j_min,
                j_max: r.j_max,
            })
        }
    }

    pub fn same_grid(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "grid mismatch: {}^{} (L={}) vs {}^{} (L={})",
                self.n,
                self.dim,
                self.length(),
                other.n,
                other.dim,
                other.length()
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_configs() {
        assert!(Grid::new(0, 64, 1.0).is_err());
        assert!(Grid::new(5, 64, 1.0).is_err());
        assert!(Grid::new(2, 100, 1.0).is_err());
        assert!(Grid::new(2, 2, 1.0).is_err());
        assert!(Grid::new(2, 64, 0.0).is_err());
        assert!(Grid::new(2, 64, f64::NAN).is_err());
        assert!(Grid::new(3, 4096, std::f64::consts::TAU).is_err());
    }

    #[test]
    fn frequency_fold() {
        let g = Grid::standard(1, 8).unwrap();
        let idx: Vec<i64> = (0..8).map(|i| g.signed_index(i)).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert!((g.freq(1) - 1.0).abs() < 1e-15);
        assert!((g.freq(5) + 3.0).abs() < 1e-15);
    }

    #[test]
    fn coords_centered() {
        let g = Grid::standard(2, 8).unwrap();
        assert!((g.coord(0) + std::f64::consts::PI).abs() < 1e-15);
        assert!(g.coord(4).abs() < 1e-15);
        let mut idx = [0usize; 2];
        g.decode(g.origin_flat(), &mut idx);
        assert_eq!(idx, [4, 4]);
    }

    #[test]
    fn block_range_tracks_resolution() {
        let g = Grid::standard(2, 256).unwrap();
        let r = g.block_range();
        assert_eq!(r.j_min, 0);
        assert_eq!(r.j_max, 6); // (7/6)*64 <= 128 < (7/6)*128
        assert!(g.validate_block(6).is_ok());
        let err = g.validate_block(7).unwrap_err();
        assert!(matches!(err, Error::Range { j: 7, .. }));

        let g = Grid::standard(2, 4096).unwrap();
        assert_eq!(g.block_range().j_max, 10);
    }
}
