//! Sinusoidal positional encoding with dataset-derived frequency bounds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{union_bbox, Coord, GeoEntity};
use crate::Mode;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodingError {
    #[error("dataset extent is zero along an axis; frequency bounds are undefined")]
    ZeroExtent,
    #[error("invalid encoding config: {0}")]
    Invalid(&'static str),
}

/// Frequency band and layout of the encoding.
///
/// Exponents are spread uniformly over `[l_min, l_max]`; a single exponent uses `l_min`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingConfig {
    pub l_min: f64,
    pub l_max: f64,
    pub count: usize,
    /// Appends the radius `r = |x|` as a third encoded component.
    pub rotation_invariant: bool,
    pub mode: Mode,
}

impl EncodingConfig {
    pub fn new(
        l_min: f64,
        l_max: f64,
        count: usize,
        rotation_invariant: bool,
        mode: Mode,
    ) -> Result<Self, EncodingError> {
        let cfg = EncodingConfig {
            l_min,
            l_max,
            count,
            rotation_invariant,
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), EncodingError> {
        if !(self.l_min.is_finite() && self.l_max.is_finite()) {
            return Err(EncodingError::Invalid("bounds must be finite"));
        }
        if self.l_max < self.l_min {
            return Err(EncodingError::Invalid("l_max must be >= l_min"));
        }
        if self.count == 0 {
            return Err(EncodingError::Invalid("frequency count must be >= 1"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        if self.rotation_invariant {
            3
        } else {
            2
        }
    }

    /// Number of output features.
    pub fn width(&self) -> usize {
        2 * self.count * self.input_dim()
    }

    pub fn exponents(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.l_min];
        }
        let step = (self.l_max - self.l_min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i == self.count - 1 {
                    self.l_max
                } else {
                    self.l_min + i as f64 * step
                }
            })
            .collect()
    }

    /// Encodes a coordinate: `pe_r` when rotation-invariant, plain `pe` otherwise.
    pub fn encode(&self, p: Coord) -> Vec<f64> {
        if self.rotation_invariant {
            pe(&[p.x, p.y, p.norm()], self)
        } else {
            pe(&[p.x, p.y], self)
        }
    }
}

/// `(sin(2^l pi c), cos(2^l pi c))` for every component `c` and exponent `l`,
/// component-major.
pub fn pe(x: &[f64], cfg: &EncodingConfig) -> Vec<f64> {
    let freqs: Vec<f64> = cfg
        .exponents()
        .iter()
        .map(|&l| l.exp2() * std::f64::consts::PI)
        .collect();
    let mut out = Vec::with_capacity(2 * freqs.len() * x.len());
    for &c in x {
        for &w in &freqs {
            let (s, co) = (w * c).sin_cos();
            out.push(s);
            out.push(co);
        }
    }
    out
}

/// `pe` of `(x, y, sqrt(x² + y²))`.
pub fn pe_r(p: Coord, cfg: &EncodingConfig) -> Vec<f64> {
    pe(&[p.x, p.y, p.norm()], cfg)
}

/// Frequency exponent bounds from the dataset extent.
///
/// `l_min = 1 - log2(Δmax)` in both modes. The upper bound is `log2(2 / Δmin)` for
/// location learning and that value plus `headroom` octaves for shape learning.
pub fn frequency_bounds(
    entities: &[GeoEntity],
    mode: Mode,
    headroom: f64,
) -> Result<(f64, f64), EncodingError> {
    let b = union_bbox(entities).ok_or(EncodingError::ZeroExtent)?;
    let (dx, dy) = (b.width(), b.height());
    let d_min = dx.min(dy);
    let d_max = dx.max(dy);
    if !(d_min > 0.0) || !d_max.is_finite() {
        return Err(EncodingError::ZeroExtent);
    }
    let l_min = 1.0 - d_max.log2();
    let upper = (2.0 / d_min).log2();
    let l_max = match mode {
        Mode::Location => upper,
        Mode::Shape => upper + headroom,
    };
    Ok((l_min, l_max.max(l_min)))
}
