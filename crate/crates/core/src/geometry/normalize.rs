use serde::{Deserialize, Serialize};

use super::{BBox, Coord, GeoEntity, Geometry, GeometryError};

/// Similarity transform `p -> (p - center) * scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub center: Coord,
    pub scale: f64,
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        center: Coord::ORIGIN,
        scale: 1.0,
    };

    /// Maps `bbox` so its longer side spans exactly `[-1, 1]`, preserving aspect.
    pub fn fit_canonical(bbox: &BBox) -> Result<Transform, GeometryError> {
        let extent = bbox.width().max(bbox.height());
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(GeometryError::ZeroExtent);
        }
        Ok(Transform {
            center: bbox.center(),
            scale: 2.0 / extent,
        })
    }

    #[inline]
    pub fn apply(&self, p: Coord) -> Coord {
        (p - self.center) * self.scale
    }

    #[inline]
    pub fn invert(&self, p: Coord) -> Coord {
        p * (1.0 / self.scale) + self.center
    }

    pub fn apply_geometry(&self, g: &Geometry) -> Geometry {
        let t = *self;
        g.map(move |p| t.apply(p))
    }

    pub fn invert_geometry(&self, g: &Geometry) -> Geometry {
        let t = *self;
        g.map(move |p| t.invert(p))
    }

    pub fn apply_entity(&self, e: &GeoEntity) -> GeoEntity {
        GeoEntity::new(e.id.clone(), self.apply_geometry(&e.geometry))
    }
}

/// Tight axis-aligned bounds of an entity.
pub fn bbox(e: &GeoEntity) -> BBox {
    e.geometry.bbox()
}

/// Scales one entity into the canonical square. Points have no shape and are rejected.
pub fn normalize_shape(e: &GeoEntity) -> Result<(GeoEntity, Transform), GeometryError> {
    let t = Transform::fit_canonical(&e.geometry.bbox())?;
    Ok((t.apply_entity(e), t))
}

/// Maps a whole dataset into the canonical square with one shared transform.
pub fn normalize_dataset(
    entities: &[GeoEntity],
) -> Result<(Vec<GeoEntity>, Transform), GeometryError> {
    let t = Transform::fit_canonical(&union_bbox(entities).ok_or(GeometryError::EmptyDataset)?)?;
    Ok((entities.iter().map(|e| t.apply_entity(e)).collect(), t))
}

pub fn union_bbox(entities: &[GeoEntity]) -> Option<BBox> {
    let mut iter = entities.iter();
    let mut b = iter.next()?.geometry.bbox();
    for e in iter {
        b = b.union(&e.geometry.bbox());
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Polygon, Polyline};

    fn c(x: f64, y: f64) -> Coord {
        Coord::new(x, y)
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> GeoEntity {
        GeoEntity::new(
            "r",
            Geometry::Polygon(
                Polygon::from_rings(vec![c(x0, y0), c(x1, y0), c(x1, y1), c(x0, y1)], vec![])
                    .unwrap(),
            ),
        )
    }

    #[test]
    fn square_maps_to_canonical() {
        let (n, _) = normalize_shape(&rect(3., 3., 5., 5.)).unwrap();
        let b = n.geometry.bbox();
        assert_eq!((b.min, b.max), (c(-1., -1.), c(1., 1.)));
    }

    #[test]
    fn rectangle_keeps_aspect() {
        let (n, t) = normalize_shape(&rect(0., 0., 4., 2.)).unwrap();
        let b = n.geometry.bbox();
        assert_eq!((b.min, b.max), (c(-1., -0.5), c(1., 0.5)));
        assert_eq!(t.scale, 0.5);
    }

    #[test]
    fn point_has_no_shape() {
        let p = GeoEntity::new("p", Geometry::Point(c(1., 1.)));
        assert_eq!(normalize_shape(&p).unwrap_err(), GeometryError::ZeroExtent);
    }

    #[test]
    fn dataset_of_two_points() {
        let pts = vec![
            GeoEntity::new("a", Geometry::Point(c(0., 0.))),
            GeoEntity::new("b", Geometry::Point(c(10., 10.))),
        ];
        let (n, _) = normalize_dataset(&pts).unwrap();
        assert_eq!(n[0].geometry, Geometry::Point(c(-1., -1.)));
        assert_eq!(n[1].geometry, Geometry::Point(c(1., 1.)));
        assert_eq!(normalize_dataset(&[]).unwrap_err(), GeometryError::EmptyDataset);
    }

    #[test]
    fn single_entity_dataset_equals_shape_normalization() {
        let l = GeoEntity::new(
            "l",
            Geometry::Polyline(Polyline::new(vec![c(1., 2.), c(7., 3.), c(4., 9.)]).unwrap()),
        );
        let (a, ta) = normalize_shape(&l).unwrap();
        let (b, tb) = normalize_dataset(std::slice::from_ref(&l)).unwrap();
        assert_eq!(ta, tb);
        assert_eq!(a, b[0]);
    }
}
