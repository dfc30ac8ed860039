use super::{Coord, Polygon, Ring};

/// Euclidean distance from `p` to the closed segment `[a, b]`.
///
/// A degenerate segment (`a == b`) is treated as the point `a`.
#[inline]
pub fn point_segment_distance(p: Coord, a: Coord, b: Coord) -> f64 {
    point_segment_distance_squared(p, a, b).sqrt()
}

#[inline]
pub(crate) fn point_segment_distance_squared(p: Coord, a: Coord, b: Coord) -> f64 {
    let ab = b - a;
    let ap = p - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return ap.norm_squared();
    }
    let t = (ap.dot(ab) / len2).clamp(0.0, 1.0);
    (ap - ab * t).norm_squared()
}

/// Twice the signed area of triangle `(a, b, p)`; positive when `p` is left of `a -> b`.
#[inline]
fn orient(a: Coord, b: Coord, p: Coord) -> f64 {
    (b - a).cross(p - a)
}

/// Winding number of `ring` around `p`.
pub fn winding_number(p: Coord, ring: &Ring) -> i32 {
    let mut wn = 0;
    for (a, b) in ring.edges() {
        if a.y <= p.y {
            if b.y > p.y && orient(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && orient(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// True iff `p` lies in the filled region of `poly`: inside the exterior and inside no hole.
pub fn point_in_polygon(p: Coord, poly: &Polygon) -> bool {
    winding_number(p, poly.exterior()) != 0
        && poly.holes().iter().all(|h| winding_number(p, h) == 0)
}

fn on_segment(a: Coord, b: Coord, p: Coord) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test, including touching and collinear overlap.
pub fn segments_intersect(a: Coord, b: Coord, c: Coord, d: Coord) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Minimum distance between closed segments `[a, b]` and `[c, d]`; zero when they intersect.
pub fn segment_segment_distance(a: Coord, b: Coord, c: Coord, d: Coord) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance_squared(a, c, d)
        .min(point_segment_distance_squared(b, c, d))
        .min(point_segment_distance_squared(c, a, b))
        .min(point_segment_distance_squared(d, a, b))
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Coord {
        Coord::new(x, y)
    }

    #[test]
    fn point_segment_examples() {
        assert_eq!(point_segment_distance(c(1., 1.), c(0., 0.), c(2., 0.)), 1.0);
        assert_eq!(point_segment_distance(c(3., 0.), c(0., 0.), c(2., 0.)), 1.0);
        assert_eq!(point_segment_distance(c(0.5, 0.), c(0., 0.), c(2., 0.)), 0.0);
        assert_eq!(point_segment_distance(c(3., 4.), c(0., 0.), c(0., 0.)), 5.0);
    }

    fn square(h: f64) -> Vec<Coord> {
        vec![c(-h, -h), c(h, -h), c(h, h), c(-h, h)]
    }

    #[test]
    fn point_in_polygon_examples() {
        let sq = Polygon::from_rings(square(1.0), vec![]).unwrap();
        assert!(point_in_polygon(c(0., 0.), &sq));
        assert!(!point_in_polygon(c(2., 2.), &sq));
        let holed = Polygon::from_rings(square(1.0), vec![square(0.5)]).unwrap();
        assert!(!point_in_polygon(c(0., 0.), &holed));
        assert!(point_in_polygon(c(0.75, 0.), &holed));
    }

    #[test]
    fn winding_is_signed_by_orientation() {
        let ccw = Ring::new(square(1.0)).unwrap();
        let mut v = square(1.0);
        v.reverse();
        let cw = Ring::new(v).unwrap();
        assert_eq!(winding_number(c(0., 0.), &ccw), 1);
        assert_eq!(winding_number(c(0., 0.), &cw), -1);
    }

    #[test]
    fn segment_pairs() {
        assert!(segments_intersect(c(0., 0.), c(2., 2.), c(0., 2.), c(2., 0.)));
        assert!(segments_intersect(c(0., 0.), c(2., 0.), c(1., 0.), c(3., 0.)));
        assert!(segments_intersect(c(0., 0.), c(2., 0.), c(2., 0.), c(2., 5.)));
        assert!(!segments_intersect(c(0., 0.), c(1., 0.), c(2., 0.), c(3., 0.)));
        assert_eq!(segment_segment_distance(c(0., 0.), c(1., 0.), c(0., 2.), c(1., 2.)), 2.0);
        assert_eq!(segment_segment_distance(c(0., 0.), c(1., 0.), c(3., 0.), c(4., 0.)), 2.0);
    }
}
