//! Scalar fields on regular grids and their grayscale PGM rendering.

use thiserror::Error;

use crate::geometry::{sdf, BBox, Geometry};
use crate::sampling::grid_points;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error("value range must be positive and finite")]
    Range,
    #[error("malformed PGM: {0}")]
    Pgm(&'static str),
}

/// Values on an inclusive `resolution × resolution` grid, row-major from the min corner.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub resolution: usize,
    pub domain: BBox,
    pub values: Vec<f64>,
}

impl Field {
    pub fn check_resolution(resolution: usize) -> Result<(), RenderError> {
        if resolution < 2 {
            Err(RenderError::Resolution(resolution))
        } else {
            Ok(())
        }
    }

    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.resolution + col]
    }

    pub fn mean_abs_diff(&self, other: &Field) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum();
        s / self.values.len() as f64
    }
}

/// Exact signed distance of `g` sampled on the grid.
pub fn truth_field(g: &Geometry, resolution: usize, domain: BBox) -> Result<Field, RenderError> {
    Field::check_resolution(resolution)?;
    let values = grid_points(&domain, resolution)
        .into_iter()
        .map(|p| sdf(p, g))
        .collect();
    Ok(Field {
        resolution,
        domain,
        values,
    })
}

/// Gray level of a signed distance: `round(128 + 127 v / range)` clamped to `[0, 255]`.
pub fn gray(v: f64, range: f64) -> u8 {
    (128.0 + 127.0 * v / range).round().clamp(0.0, 255.0) as u8
}

/// Binary PGM (P5). The top image row is the grid row at maximum y.
pub fn to_pgm(field: &Field, range: f64) -> Result<Vec<u8>, RenderError> {
    if !(range.is_finite() && range > 0.0) {
        return Err(RenderError::Range);
    }
    let n = field.resolution;
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    for row in (0..n).rev() {
        out.extend(field.values[row * n..(row + 1) * n].iter().map(|&v| gray(v, range)));
    }
    Ok(out)
}

/// Width, height and pixels of a binary PGM with maxval 255.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>), RenderError> {
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(RenderError::Pgm("truncated header"));
        }
        fields.push(&bytes[start..pos]);
    }
    if fields[0] != b"P5" {
        return Err(RenderError::Pgm("not a P5 file"));
    }
    let num = |b: &[u8]| -> Result<usize, RenderError> {
        std::str::from_utf8(b)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(RenderError::Pgm("bad header number"))
    };
    let (w, h, max) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if max != 255 {
        return Err(RenderError::Pgm("maxval must be 255"));
    }
    let pixels = bytes.get(pos + 1..).ok_or(RenderError::Pgm("truncated pixels"))?;
    if Some(pixels.len()) != w.checked_mul(h) {
        return Err(RenderError::Pgm("pixel count does not match header"));
    }
    Ok((w, h, pixels.to_vec()))
}
