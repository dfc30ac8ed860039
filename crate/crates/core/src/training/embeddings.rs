//! Embedding sets and the `G2VE` export format.
//!
//! ```text
//! "G2VE", u8 version (1), u32 count, u32 dim,
//! per entity: u32 id byte length, UTF-8 id, dim × f32
//! ```
//! All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"G2VE";
pub const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an embedding file: bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported embedding file version {0}")]
    UnsupportedVersion(u8),
    #[error("embedding file truncated")]
    Truncated,
    #[error("invalid embedding file: {0}")]
    Invalid(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got} for `{id}`")]
    Dimension { id: String, expected: usize, got: usize },
    #[error("id sets differ; missing: {}", .missing.join(", "))]
    IdMismatch { missing: Vec<String> },
}

/// Which pipeline produced a set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Shape,
    Location,
    Combined,
}

/// Id-ordered embedding vectors of uniform dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    /// `None` when read from a file, which does not record the producer.
    pub kind: Option<EmbeddingKind>,
    dim: usize,
    vectors: IndexMap<String, Vec<f32>>,
}

impl EmbeddingSet {
    pub fn new(kind: Option<EmbeddingKind>, dim: usize) -> Self {
        EmbeddingSet {
            kind,
            dim,
            vectors: IndexMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, v: Vec<f32>) -> Result<(), EmbeddingError> {
        let id = id.into();
        if v.len() != self.dim {
            return Err(EmbeddingError::Dimension {
                id,
                expected: self.dim,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::Invalid(format!("non-finite value for `{id}`")));
        }
        if self.vectors.contains_key(&id) {
            return Err(EmbeddingError::Invalid(format!("duplicate id `{id}`")));
        }
        self.vectors.insert(id, v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vectors.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Ids of `wanted` not present in the set.
    pub fn missing<'a>(&self, wanted: impl IntoIterator<Item = &'a str>) -> Vec<String> {
        wanted
            .into_iter()
            .filter(|id| !self.contains(id))
            .map(str::to_string)
            .collect()
    }

    /// Columns `range` of every vector.
    pub fn slice(&self, range: std::ops::Range<usize>, kind: Option<EmbeddingKind>) -> EmbeddingSet {
        assert!(range.end <= self.dim, "slice beyond embedding dimension");
        EmbeddingSet {
            kind,
            dim: range.len(),
            vectors: self
                .vectors
                .iter()
                .map(|(k, v)| (k.clone(), v[range.clone()].to_vec()))
                .collect(),
        }
    }
}

/// Uniform unit-norm shape vector for point entities.
pub fn uniform_vector(dim: usize) -> Vec<f32> {
    vec![(1.0 / (dim as f64).sqrt()) as f32; dim]
}

/// Per-id concatenation `[location, shape]`, in the location set's order.
pub fn combine(loc: &EmbeddingSet, shp: &EmbeddingSet) -> Result<EmbeddingSet, EmbeddingError> {
    let mut missing = shp.missing(loc.ids());
    missing.extend(loc.missing(shp.ids()));
    if !missing.is_empty() {
        return Err(EmbeddingError::IdMismatch { missing });
    }
    let mut out = EmbeddingSet::new(Some(EmbeddingKind::Combined), loc.dim + shp.dim);
    for (id, l) in loc.iter() {
        let mut v = l.to_vec();
        v.extend_from_slice(shp.get(id).expect("id sets checked"));
        out.insert(id, v)?;
    }
    Ok(out)
}

pub fn write_embeddings(set: &EmbeddingSet) -> Result<Vec<u8>, EmbeddingError> {
    let to_u32 = |n: usize| {
        u32::try_from(n).map_err(|_| EmbeddingError::Invalid(format!("length {n} exceeds u32")))
    };
    let mut out = Vec::with_capacity(13 + set.len() * (8 + 4 * set.dim));
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&to_u32(set.len())?.to_le_bytes());
    out.extend_from_slice(&to_u32(set.dim)?.to_le_bytes());
    for (id, v) in set.iter() {
        out.extend_from_slice(&to_u32(id.len())?.to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_embeddings(bytes: &[u8]) -> Result<EmbeddingSet, EmbeddingError> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8], EmbeddingError> {
        let end = pos.checked_add(n).filter(|&e| e <= bytes.len()).ok_or(EmbeddingError::Truncated)?;
        let s = &bytes[pos..end];
        pos = end;
        Ok(s)
    };
    let magic: [u8; 4] = take(4)?.try_into().unwrap();
    if &magic != MAGIC {
        return Err(EmbeddingError::BadMagic(magic));
    }
    let version = take(1)?[0];
    if version != VERSION {
        return Err(EmbeddingError::UnsupportedVersion(version));
    }
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap()) as usize;
    let count = u32_at(take(4)?);
    let dim = u32_at(take(4)?);
    let mut set = EmbeddingSet::new(None, dim);
    for _ in 0..count {
        let len = u32_at(take(4)?);
        let id = std::str::from_utf8(take(len)?)
            .map_err(|_| EmbeddingError::Invalid("id is not UTF-8".into()))?
            .to_string();
        let raw = take(dim.checked_mul(4).ok_or(EmbeddingError::Truncated)?)?;
        let v = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        set.insert(id, v)?;
    }
    if pos != bytes.len() {
        return Err(EmbeddingError::Invalid(format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok(set)
}

pub fn save_embeddings(path: impl AsRef<Path>, set: &EmbeddingSet) -> Result<(), EmbeddingError> {
    fs::write(path, write_embeddings(set)?)?;
    Ok(())
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet, EmbeddingError> {
    read_embeddings(&fs::read(path)?)
}
