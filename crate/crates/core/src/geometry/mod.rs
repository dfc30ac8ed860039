//! Geo-entity types and exact signed-distance evaluation.

mod coord;
mod distance;
mod entity;
mod normalize;
mod oracle;
mod sdf;

pub use coord::{BBox, Coord};
pub use distance::{
    point_in_polygon, point_segment_distance, segment_segment_distance, segments_intersect,
    winding_number,
};
pub use entity::{GeoEntity, Geometry, GeometryKind, Polygon, Polyline, Ring};
pub use normalize::{bbox, normalize_dataset, normalize_shape, union_bbox, Transform};
pub use oracle::{boundary_samples, brute_force_sdf, brute_force_sdf_with, inside_even_odd};
pub use sdf::{entity_sdf, min_entity_distance, sdf};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("{kind} needs at least {min} distinct vertices, got {got}")]
    TooFewVertices {
        kind: &'static str,
        min: usize,
        got: usize,
    },
    #[error("ring has zero signed area")]
    ZeroArea,
    #[error("hole {hole} is not strictly inside the exterior ring")]
    HoleOutsideExterior { hole: usize },
    #[error("geometry has zero extent; shape is undefined for points")]
    ZeroExtent,
    #[error("dataset is empty")]
    EmptyDataset,
}
