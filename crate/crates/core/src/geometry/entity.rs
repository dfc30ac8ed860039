use serde::{Deserialize, Serialize};

use super::distance::{segments_intersect, winding_number};
use super::{BBox, Coord, GeometryError};

/// A closed ring. The closing vertex is implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct Ring {
    vertices: Vec<Coord>,
}

impl Ring {
    /// Builds a ring, dropping consecutive duplicates and a repeated closing vertex.
    pub fn new(vertices: Vec<Coord>) -> Result<Ring, GeometryError> {
        let mut vertices = dedup_consecutive(vertices)?;
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices {
                kind: "ring",
                min: 3,
                got: vertices.len(),
            });
        }
        let ring = Ring { vertices };
        let area = ring.signed_area();
        if area == 0.0 || !area.is_finite() {
            return Err(GeometryError::ZeroArea);
        }
        Ok(ring)
    }

    pub fn vertices(&self) -> &[Coord] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area; positive for counter-clockwise rings.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.vertices[i].cross(self.vertices[(i + 1) % n]);
        }
        0.5 * acc
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > 0.0
    }

    /// Edges `(v[i], v[i+1])` including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Coord, Coord)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    fn oriented(mut self, ccw: bool) -> Ring {
        if self.is_ccw() != ccw {
            self.vertices.reverse();
        }
        self
    }

    pub(crate) fn map(&self, f: impl Fn(Coord) -> Coord) -> Ring {
        Ring {
            vertices: self.vertices.iter().copied().map(f).collect(),
        }
    }
}

/// Polygon with optional holes. Exterior is stored counter-clockwise, holes clockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    exterior: Ring,
    holes: Vec<Ring>,
}

impl Polygon {
    pub fn new(exterior: Ring, holes: Vec<Ring>) -> Result<Polygon, GeometryError> {
        let exterior = exterior.oriented(true);
        let holes: Vec<Ring> = holes.into_iter().map(|h| h.oriented(false)).collect();
        for (idx, hole) in holes.iter().enumerate() {
            let inside = hole
                .vertices()
                .iter()
                .all(|&v| winding_number(v, &exterior) != 0);
            let crosses = hole.edges().any(|(a, b)| {
                exterior
                    .edges()
                    .any(|(c, d)| segments_intersect(a, b, c, d))
            });
            if !inside || crosses {
                return Err(GeometryError::HoleOutsideExterior { hole: idx });
            }
        }
        Ok(Polygon { exterior, holes })
    }

    /// Convenience constructor from raw coordinate rings.
    pub fn from_rings(
        exterior: Vec<Coord>,
        holes: Vec<Vec<Coord>>,
    ) -> Result<Polygon, GeometryError> {
        let exterior = Ring::new(exterior)?;
        let holes = holes
            .into_iter()
            .map(Ring::new)
            .collect::<Result<Vec<_>, _>>()?;
        Polygon::new(exterior, holes)
    }

    pub fn exterior(&self) -> &Ring {
        &self.exterior
    }

    pub fn holes(&self) -> &[Ring] {
        &self.holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    pub fn edge_count(&self) -> usize {
        self.rings().map(Ring::len).sum()
    }

    pub(crate) fn map(&self, f: impl Fn(Coord) -> Coord + Copy) -> Polygon {
        Polygon {
            exterior: self.exterior.map(f),
            holes: self.holes.iter().map(|h| h.map(f)).collect(),
        }
    }
}

/// Open polyline with at least one non-degenerate edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    vertices: Vec<Coord>,
}

impl Polyline {
    pub fn new(vertices: Vec<Coord>) -> Result<Polyline, GeometryError> {
        let vertices = dedup_consecutive(vertices)?;
        if vertices.len() < 2 {
            return Err(GeometryError::TooFewVertices {
                kind: "polyline",
                min: 2,
                got: vertices.len(),
            });
        }
        Ok(Polyline { vertices })
    }

    pub fn vertices(&self) -> &[Coord] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Coord, Coord)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Point,
    Polyline,
    Polygon,
    MultiPolygon,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Point(Coord),
    Polyline(Polyline),
    Polygon(Polygon),
    MultiPolygon(Vec<Polygon>),
}

impl Geometry {
    pub fn point(c: Coord) -> Result<Geometry, GeometryError> {
        if !c.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(Geometry::Point(c))
    }

    pub fn multi_polygon(polys: Vec<Polygon>) -> Result<Geometry, GeometryError> {
        if polys.is_empty() {
            return Err(GeometryError::TooFewVertices {
                kind: "multipolygon",
                min: 1,
                got: 0,
            });
        }
        Ok(Geometry::MultiPolygon(polys))
    }

    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Point(_) => GeometryKind::Point,
            Geometry::Polyline(_) => GeometryKind::Polyline,
            Geometry::Polygon(_) => GeometryKind::Polygon,
            Geometry::MultiPolygon(_) => GeometryKind::MultiPolygon,
        }
    }

    pub fn has_interior(&self) -> bool {
        matches!(self, Geometry::Polygon(_) | Geometry::MultiPolygon(_))
    }

    pub fn polygons(&self) -> &[Polygon] {
        match self {
            Geometry::Polygon(p) => std::slice::from_ref(p),
            Geometry::MultiPolygon(ps) => ps,
            _ => &[],
        }
    }

    /// Every vertex, in ring/line order.
    pub fn vertices(&self) -> Vec<Coord> {
        match self {
            Geometry::Point(c) => vec![*c],
            Geometry::Polyline(l) => l.vertices().to_vec(),
            _ => self
                .polygons()
                .iter()
                .flat_map(|p| p.rings().flat_map(|r| r.vertices().iter().copied()))
                .collect(),
        }
    }

    /// Boundary segments. A point has none.
    pub fn edges(&self) -> Vec<(Coord, Coord)> {
        match self {
            Geometry::Point(_) => Vec::new(),
            Geometry::Polyline(l) => l.edges().collect(),
            _ => self
                .polygons()
                .iter()
                .flat_map(|p| p.rings().flat_map(|r| r.edges()))
                .collect(),
        }
    }

    pub fn edge_count(&self) -> usize {
        match self {
            Geometry::Point(_) => 0,
            Geometry::Polyline(l) => l.vertices().len() - 1,
            _ => self.polygons().iter().map(Polygon::edge_count).sum(),
        }
    }

    /// Total boundary length.
    pub fn perimeter(&self) -> f64 {
        self.edges().iter().map(|(a, b)| a.distance(*b)).sum()
    }

    pub fn bbox(&self) -> BBox {
        match self {
            Geometry::Point(c) => BBox::new(*c, *c),
            Geometry::Polyline(l) => BBox::of_points(l.vertices().iter().copied()).unwrap(),
            _ => {
                let polys = self.polygons();
                let mut b = BBox::of_points(polys[0].exterior().vertices().iter().copied())
                    .unwrap();
                for p in &polys[1..] {
                    for &v in p.exterior().vertices() {
                        b.extend(v);
                    }
                }
                b
            }
        }
    }

    /// Applies a point map that preserves orientation (translation + positive scale + rotation).
    pub fn map(&self, f: impl Fn(Coord) -> Coord + Copy) -> Geometry {
        match self {
            Geometry::Point(c) => Geometry::Point(f(*c)),
            Geometry::Polyline(l) => Geometry::Polyline(Polyline {
                vertices: l.vertices.iter().copied().map(f).collect(),
            }),
            Geometry::Polygon(p) => Geometry::Polygon(p.map(f)),
            Geometry::MultiPolygon(ps) => {
                Geometry::MultiPolygon(ps.iter().map(|p| p.map(f)).collect())
            }
        }
    }
}

/// A geo-entity: an identified point, polyline, polygon or multipolygon.
#[derive(Clone, Debug, PartialEq)]
pub struct GeoEntity {
    pub id: String,
    pub geometry: Geometry,
}

impl GeoEntity {
    pub fn new(id: impl Into<String>, geometry: Geometry) -> Self {
        GeoEntity {
            id: id.into(),
            geometry,
        }
    }

    pub fn kind(&self) -> GeometryKind {
        self.geometry.kind()
    }
}

fn dedup_consecutive(mut vertices: Vec<Coord>) -> Result<Vec<Coord>, GeometryError> {
    if vertices.iter().any(|c| !c.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    vertices.dedup();
    Ok(vertices)
}
