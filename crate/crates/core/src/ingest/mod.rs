//! Dataset container, text-format parsers and synthetic generators.

mod dataset;
mod geojson;
mod synth;
mod wkt;

pub use dataset::Dataset;
pub use geojson::{parse_geojson, to_geojson};
pub use synth::{synthesize, synthesize_scattered, synthesize_shapes, Family, SynthesisKind, SynthesisSpec};
pub use wkt::{parse_wkt, to_wkt};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unsupported geometry type `{0}`")]
    Unsupported(String),
    #[error("invalid geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("malformed GeoJSON: {0}")]
    Json(String),
    #[error("duplicate entity id `{0}`")]
    DuplicateId(String),
    #[error("label refers to unknown entity id `{0}`")]
    UnknownLabel(String),
    #[error("invalid synthesis spec: {field}: {message}")]
    Spec { field: &'static str, message: String },
}
