use super::distance::{point_in_polygon, point_segment_distance_squared, segment_segment_distance};
use super::{Coord, GeoEntity, Geometry};

/// Signed distance from `p` to the boundary of `geometry`; negative inside filled regions.
pub fn sdf(p: Coord, geometry: &Geometry) -> f64 {
    match geometry {
        Geometry::Point(c) => p.distance(*c),
        Geometry::Polyline(l) => l
            .edges()
            .map(|(a, b)| point_segment_distance_squared(p, a, b))
            .fold(f64::INFINITY, f64::min)
            .sqrt(),
        Geometry::Polygon(_) | Geometry::MultiPolygon(_) => {
            let polys = geometry.polygons();
            let mut best = f64::INFINITY;
            for poly in polys {
                for ring in poly.rings() {
                    for (a, b) in ring.edges() {
                        best = best.min(point_segment_distance_squared(p, a, b));
                    }
                }
            }
            let d = best.sqrt();
            if polys.iter().any(|poly| point_in_polygon(p, poly)) {
                -d
            } else {
                d
            }
        }
    }
}

/// [`sdf`] against an entity.
#[inline]
pub fn entity_sdf(p: Coord, e: &GeoEntity) -> f64 {
    sdf(p, &e.geometry)
}

/// Minimum boundary-to-boundary distance; zero when the boundaries meet.
pub fn min_entity_distance(a: &Geometry, b: &Geometry) -> f64 {
    let sa = boundary_segments(a);
    let sb = boundary_segments(b);
    let mut best = f64::INFINITY;
    for &(p, q) in &sa {
        for &(r, s) in &sb {
            best = best.min(segment_segment_distance(p, q, r, s));
            if best == 0.0 {
                return 0.0;
            }
        }
    }
    best
}

/// Boundary segments, with a point represented as a degenerate segment.
fn boundary_segments(g: &Geometry) -> Vec<(Coord, Coord)> {
    match g {
        Geometry::Point(c) => vec![(*c, *c)],
        _ => g.edges(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Polygon, Polyline};

    fn c(x: f64, y: f64) -> Coord {
        Coord::new(x, y)
    }

    fn square_at(cx: f64, cy: f64, h: f64) -> Geometry {
        Geometry::Polygon(
            Polygon::from_rings(
                vec![c(cx - h, cy - h), c(cx + h, cy - h), c(cx + h, cy + h), c(cx - h, cy + h)],
                vec![],
            )
            .unwrap(),
        )
    }

    #[test]
    fn square_examples() {
        let sq = square_at(0., 0., 1.);
        assert_eq!(sdf(c(0., 0.), &sq), -1.0);
        assert_eq!(sdf(c(0., 3.), &sq), 2.0);
    }

    #[test]
    fn polyline_example_matches_segment_minimum() {
        let l = Geometry::Polyline(Polyline::new(vec![c(0., 0.), c(1., 0.), c(1., 1.)]).unwrap());
        let p = c(0.3, 0.7);
        // first segment: 0.7, second segment: 0.7 (x distance to x=1)
        let expected = 0.7f64.min(1.0 - 0.3);
        assert!((sdf(p, &l) - expected).abs() < 1e-15);
    }

    #[test]
    fn positive_inside_hole() {
        let holed = Geometry::Polygon(
            Polygon::from_rings(
                vec![c(0., 0.), c(4., 0.), c(4., 4.), c(0., 4.)],
                vec![vec![c(1., 1.), c(1., 3.), c(3., 3.), c(3., 1.)]],
            )
            .unwrap(),
        );
        assert_eq!(sdf(c(2., 2.), &holed), 1.0);
        assert_eq!(sdf(c(0.5, 2.), &holed), -0.5);
    }

    #[test]
    fn multipolygon_sign_is_union() {
        let mp = Geometry::multi_polygon(vec![
            square_at(0., 0., 1.).polygons()[0].clone(),
            square_at(5., 0., 1.).polygons()[0].clone(),
        ])
        .unwrap();
        assert_eq!(sdf(c(5., 0.), &mp), -1.0);
        assert_eq!(sdf(c(2.5, 0.), &mp), 1.5);
    }

    #[test]
    fn entity_distance_examples() {
        let a = square_at(0., 0., 0.5);
        let b = square_at(4., 0., 0.5);
        assert_eq!(min_entity_distance(&a, &b), 3.0);
        let a = square_at(0., 0., 1.);
        let b = square_at(4., 0., 1.);
        assert_eq!(min_entity_distance(&a, &b), 2.0);
        assert_eq!(min_entity_distance(&a, &a), 0.0);
        let p = Geometry::Point(c(0., 5.));
        assert_eq!(min_entity_distance(&p, &a), 4.0);
        assert_eq!(min_entity_distance(&p, &Geometry::Point(c(3., 1.))), 5.0);
    }
}
