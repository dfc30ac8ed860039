//! `G2V1` checkpoint codec.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "G2V1"
//! u8   mode (0 shape, 1 location)
//! f64  l_min, f64 l_max, u32 frequency count, u8 rotation-invariant
//! f64  LeakyReLU slope
//! u32  pe width, u32 latent dim, u32 hidden layer count, u32 × count widths
//! per layer: f32 weights (row-major, fan_out × fan_in), f32 biases
//! u32  latent count, u32 latent dim, per id: u32 byte length + UTF-8
//! f32  latent values (row-major)
//! u32  completed epochs
//! u8   optimizer flag; when 1:
//!      u64 step, f64 lr_net, f64 lr_latent, f64 beta1, f64 beta2, f64 eps,
//!      per layer: f32 m_w, m_b, v_w, v_b; then f32 m_latent, v_latent
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use thiserror::Error;

use super::{AdamConfig, AdamState, Arch, Dense, LatentTable, MlpParams};
use crate::encoding::EncodingConfig;
use crate::Mode;

pub const MAGIC: &[u8; 4] = b"G2V1";
const MAX_HIDDEN_LAYERS: u32 = 64;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint: bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("checkpoint truncated at byte {0}")]
    Truncated(usize),
    #[error("invalid checkpoint: {0}")]
    Invalid(String),
    #[error("checkpoint holds a {found}-mode model, expected {expected}")]
    ModeMismatch { expected: Mode, found: Mode },
}

/// Everything needed to evaluate a trained model or resume its training.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub encoding: EncodingConfig,
    pub params: MlpParams<f32>,
    pub latents: LatentTable<f32>,
    pub epochs_completed: u32,
    pub optimizer: Option<AdamState<f32>>,
}

impl Checkpoint {
    pub fn mode(&self) -> Mode {
        self.encoding.mode
    }
}

fn mode_tag(m: Mode) -> u8 {
    match m {
        Mode::Shape => 0,
        Mode::Location => 1,
    }
}

struct Out(Vec<u8>);

impl Out {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32s<'a>(&mut self, it: impl IntoIterator<Item = &'a f32>) {
        for v in it {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }
    fn len(&mut self, n: usize) -> Result<(), CheckpointError> {
        let n = u32::try_from(n).map_err(|_| CheckpointError::Invalid(format!("length {n} exceeds u32")))?;
        self.u32(n);
        Ok(())
    }
    fn dense(&mut self, d: &Dense<f32>) {
        self.f32s(d.weight.iter());
        self.f32s(d.bias.iter());
    }
}

/// Serializes a checkpoint to bytes.
pub fn write_checkpoint(c: &Checkpoint) -> Result<Vec<u8>, CheckpointError> {
    let arch = &c.params.arch;
    if arch.pe_width != c.encoding.width() {
        return Err(CheckpointError::Invalid(format!(
            "network expects {} encoded features but the encoding produces {}",
            arch.pe_width,
            c.encoding.width()
        )));
    }
    if c.latents.dim() != arch.latent_dim {
        return Err(CheckpointError::Invalid("latent table dimension differs from network".into()));
    }
    let mut o = Out(Vec::with_capacity(4 * arch.parameter_count() + 4 * c.latents.values().len() + 256));
    o.0.extend_from_slice(MAGIC);
    o.u8(mode_tag(c.encoding.mode));
    o.f64(c.encoding.l_min);
    o.f64(c.encoding.l_max);
    o.len(c.encoding.count)?;
    o.u8(c.encoding.rotation_invariant as u8);
    o.f64(arch.slope);
    o.len(arch.pe_width)?;
    o.len(arch.latent_dim)?;
    o.len(arch.hidden.len())?;
    for &h in &arch.hidden {
        o.len(h)?;
    }
    for layer in &c.params.layers {
        o.dense(layer);
    }
    o.len(c.latents.len())?;
    o.len(c.latents.dim())?;
    for id in c.latents.ids() {
        o.len(id.len())?;
        o.0.extend_from_slice(id.as_bytes());
    }
    o.f32s(c.latents.values().iter());
    o.u32(c.epochs_completed);
    match &c.optimizer {
        None => o.u8(0),
        Some(s) => {
            o.u8(1);
            o.u64(s.step);
            let k = &s.config;
            for v in [k.lr_net, k.lr_latent, k.beta1, k.beta2, k.eps] {
                o.f64(v);
            }
            for (m, v) in s.m.iter().zip(&s.v) {
                o.f32s(m.weight.iter());
                o.f32s(m.bias.iter());
                o.f32s(v.weight.iter());
                o.f32s(v.bias.iter());
            }
            o.f32s(s.m_latent.iter());
            o.f32s(s.v_latent.iter());
        }
    }
    Ok(o.0)
}

struct In<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> In<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or(CheckpointError::Truncated(self.buf.len()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, CheckpointError> {
        let bytes = self.take(n.checked_mul(4).ok_or(CheckpointError::Truncated(self.buf.len()))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect())
    }
    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Array2<f32>, CheckpointError> {
        let n = rows.checked_mul(cols).ok_or(CheckpointError::Truncated(self.buf.len()))?;
        Ok(Array2::from_shape_vec((rows, cols), self.f32s(n)?).expect("length checked"))
    }
    fn dense(&mut self, fan_in: usize, fan_out: usize) -> Result<Dense<f32>, CheckpointError> {
        Ok(Dense {
            weight: self.matrix(fan_out, fan_in)?,
            bias: Array1::from(self.f32s(fan_out)?),
        })
    }
}

fn invalid(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Invalid(msg.into())
}

/// Parses checkpoint bytes. `expected` rejects a model trained for the other mode.
pub fn read_checkpoint(bytes: &[u8], expected: Option<Mode>) -> Result<Checkpoint, CheckpointError> {
    let mut r = In { buf: bytes, pos: 0 };
    let magic: [u8; 4] = match bytes.get(..4) {
        Some(m) => m.try_into().unwrap(),
        None => return Err(CheckpointError::Truncated(bytes.len())),
    };
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic(magic));
    }
    r.pos = 4;
    let mode = match r.u8()? {
        0 => Mode::Shape,
        1 => Mode::Location,
        t => return Err(invalid(format!("unknown mode tag {t}"))),
    };
    if let Some(e) = expected {
        if e != mode {
            return Err(CheckpointError::ModeMismatch { expected: e, found: mode });
        }
    }
    let l_min = r.f64()?;
    let l_max = r.f64()?;
    let count = r.u32()? as usize;
    let rotation_invariant = match r.u8()? {
        0 => false,
        1 => true,
        v => return Err(invalid(format!("rotation flag must be 0 or 1, found {v}"))),
    };
    let encoding = EncodingConfig::new(l_min, l_max, count, rotation_invariant, mode)
        .map_err(|e| invalid(e.to_string()))?;
    let slope = r.f64()?;
    let pe_width = r.u32()? as usize;
    let latent_dim = r.u32()? as usize;
    let n_hidden = r.u32()?;
    if n_hidden > MAX_HIDDEN_LAYERS {
        return Err(invalid(format!("{n_hidden} hidden layers")));
    }
    let hidden = (0..n_hidden)
        .map(|_| r.u32().map(|v| v as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let arch = Arch {
        hidden,
        pe_width,
        latent_dim,
        slope,
    };
    arch.validate().map_err(|e| invalid(e.to_string()))?;
    if pe_width != encoding.width() {
        return Err(invalid(format!(
            "network expects {pe_width} encoded features but the encoding produces {}",
            encoding.width()
        )));
    }
    let dims = arch.layer_dims();
    let layers = dims
        .iter()
        .map(|&(i, o)| r.dense(i, o))
        .collect::<Result<Vec<_>, _>>()?;
    let params = MlpParams { arch, layers };

    let n_latent = r.u32()? as usize;
    let dim = r.u32()? as usize;
    if dim != latent_dim {
        return Err(invalid("latent table dimension differs from network"));
    }
    // every id costs at least its 4-byte length prefix
    if n_latent > (bytes.len() - r.pos) / 4 {
        return Err(CheckpointError::Truncated(bytes.len()));
    }
    let mut ids = Vec::with_capacity(n_latent);
    for _ in 0..n_latent {
        let len = r.u32()? as usize;
        let raw = r.take(len)?;
        let id = std::str::from_utf8(raw).map_err(|_| invalid("latent id is not UTF-8"))?;
        ids.push(id.to_string());
    }
    let values = r.matrix(n_latent, dim)?;
    let latents = LatentTable::new(ids, values).map_err(|e| invalid(e.to_string()))?;
    let epochs_completed = r.u32()?;

    let optimizer = match r.u8()? {
        0 => None,
        1 => {
            let step = r.u64()?;
            let config = AdamConfig {
                lr_net: r.f64()?,
                lr_latent: r.f64()?,
                beta1: r.f64()?,
                beta2: r.f64()?,
                eps: r.f64()?,
            };
            config.validate().map_err(|e| invalid(e.to_string()))?;
            let mut m = Vec::with_capacity(dims.len());
            let mut v = Vec::with_capacity(dims.len());
            for &(i, o) in &dims {
                m.push(r.dense(i, o)?);
                v.push(r.dense(i, o)?);
            }
            let m_latent = r.matrix(n_latent, dim)?;
            let v_latent = r.matrix(n_latent, dim)?;
            Some(AdamState {
                config,
                step,
                m,
                v,
                m_latent,
                v_latent,
            })
        }
        f => return Err(invalid(format!("optimizer flag must be 0 or 1, found {f}"))),
    };
    if r.pos != bytes.len() {
        return Err(invalid(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(Checkpoint {
        encoding,
        params,
        latents,
        epochs_completed,
        optimizer,
    })
}

pub fn save_checkpoint(path: impl AsRef<Path>, c: &Checkpoint) -> Result<(), CheckpointError> {
    let bytes = write_checkpoint(c)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>, expected: Option<Mode>) -> Result<Checkpoint, CheckpointError> {
    read_checkpoint(&fs::read(path)?, expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodecoder::init;

    fn sample(with_opt: bool) -> Checkpoint {
        let encoding = EncodingConfig::new(0.0, 6.0, 2, true, Mode::Shape).unwrap();
        let arch = Arch {
            hidden: vec![5, 4],
            pe_width: encoding.width(),
            latent_dim: 3,
            slope: 0.01,
        };
        let ids = vec!["a".to_string(), "bé".to_string()];
        let (params, latents, opt) = init::<f32>(&arch, &ids, 0.1, 9).unwrap();
        Checkpoint {
            encoding,
            params,
            latents,
            epochs_completed: 4,
            optimizer: with_opt.then_some(opt),
        }
    }

    #[test]
    fn round_trip_is_byte_exact() {
        for with_opt in [false, true] {
            let c = sample(with_opt);
            let bytes = write_checkpoint(&c).unwrap();
            let back = read_checkpoint(&bytes, Some(Mode::Shape)).unwrap();
            assert_eq!(back, c);
            assert_eq!(write_checkpoint(&back).unwrap(), bytes);
        }
    }

    #[test]
    fn corrupted_magic() {
        let mut bytes = write_checkpoint(&sample(false)).unwrap();
        bytes[0] = b'X';
        assert!(matches!(read_checkpoint(&bytes, None), Err(CheckpointError::BadMagic(_))));
    }

    #[test]
    fn wrong_mode_names_both() {
        let bytes = write_checkpoint(&sample(false)).unwrap();
        let err = read_checkpoint(&bytes, Some(Mode::Location)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("shape") && msg.contains("location"), "{msg}");
    }

    #[test]
    fn every_truncation_is_an_error() {
        let bytes = write_checkpoint(&sample(true)).unwrap();
        for n in 0..bytes.len() {
            assert!(read_checkpoint(&bytes[..n], None).is_err());
        }
    }
}
