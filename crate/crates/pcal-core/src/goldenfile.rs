//! Binary field files used by golden tests and the CLI dump commands.
//!
//! Layout: a 32-byte header (magic `PCAL`, format version, dimension and
//! points per axis as u32, box length as f64, rest reserved as zeros),
//! followed by the samples as little-endian f64 in the field's row-major
//! order. Everything about the layout is fixed so files compare bit-for-bit
//! across runs and platforms.

use crate::error::{Error, Result};
use crate::field::RealField;
use crate::grid::Grid;
use std::fs;
use std::path::Path;

const MAGIC: [u8; 4] = *b"PCAL";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

/// Parsed header of a field file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldHeader {
    pub version: u32,
    pub dim: u32,
    pub points_per_axis: u32,
    pub length: f64,
}

impl FieldHeader {
    pub fn samples(&self) -> usize {
        (self.points_per_axis as usize).pow(self.dim)
    }
}

fn encode_header(h: &FieldHeader) -> [u8; HEADER_LEN] {
    let mut buf = [0u8; HEADER_LEN];
    buf[..4].copy_from_slice(&MAGIC);
    buf[4..8].copy_from_slice(&h.version.to_le_bytes());
    buf[8..12].copy_from_slice(&h.dim.to_le_bytes());
    buf[12..16].copy_from_slice(&h.points_per_axis.to_le_bytes());
    buf[16..24].copy_from_slice(&h.length.to_le_bytes());
    buf
}

fn decode_header(buf: &[u8]) -> Result<FieldHeader> {
    if buf.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "file too short for a field header: {} bytes",
            buf.len()
        )));
    }
    if buf[..4] != MAGIC {
        return Err(Error::Format("bad magic, not a field file".into()));
    }
    let word = |at: usize| u32::from_le_bytes(buf[at..at + 4].try_into().unwrap());
    let header = FieldHeader {
        version: word(4),
        dim: word(8),
        points_per_axis: word(12),
        length: f64::from_le_bytes(buf[16..24].try_into().unwrap()),
    };
    if header.version != VERSION {
        return Err(Error::Format(format!(
            "unsupported field file version {}",
            header.version
        )));
    }
    Ok(header)
}

/// Writes a field with its grid geometry. The file is byte-identical for
/// byte-identical samples.
pub fn write_field(path: &Path, field: &RealField) -> Result<()> {
    let grid = field.grid();
    let header = FieldHeader {
        version: VERSION,
        dim: grid.dim() as u32,
        points_per_axis: grid.points_per_axis() as u32,
        length: grid.length(),
    };
    let mut bytes = Vec::with_capacity(HEADER_LEN + field.samples().len() * 8);
    bytes.extend_from_slice(&encode_header(&header));
    for &v in field.samples() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a field file back, reconstructing its grid from the header.
pub fn read_field(path: &Path) -> Result<RealField> {
    let bytes = fs::read(path)?;
    let header = decode_header(&bytes)?;
    let want = HEADER_LEN + header.samples() * 8;
    if bytes.len() != want {
        return Err(Error::Format(format!(
            "field payload is {} bytes, header promises {}",
            bytes.len() - HEADER_LEN.min(bytes.len()),
            want - HEADER_LEN
        )));
    }
    let grid = Grid::new(
        header.dim as usize,
        header.points_per_axis as usize,
        header.length,
    )?;
    let samples = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    RealField::from_samples(&grid, samples)
}

/// Header plus sample statistics, for the CLI's inspection command.
pub fn describe_field(path: &Path) -> Result<(FieldHeader, FieldStats)> {
    let field = read_field(path)?;
    let bytes = fs::read(path)?;
    let header = decode_header(&bytes)?;
    let s = field.samples();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in s {
        min = min.min(v);
        max = max.max(v);
    }
    Ok((
        header,
        FieldStats {
            min,
            max,
            l2: field.l2(),
            mean: s.iter().sum::<f64>() / s.len() as f64,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStats {
    pub min: f64,
    pub max: f64,
    pub l2: f64,
    pub mean: f64,
}
