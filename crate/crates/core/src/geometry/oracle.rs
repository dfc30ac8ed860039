//! Brute-force signed distance used to cross-check [`super::sdf`].
//!
//! Distances come from dense arc-length samples of the boundary and the inside
//! test is even-odd ray casting, so neither shares code with the exact path.

use super::{Coord, Geometry};

/// Approximates the signed distance with `n` boundary samples spread by arc length.
///
/// The unsigned error is bounded by `perimeter / (2 n)`.
pub fn brute_force_sdf(p: Coord, geometry: &Geometry, n: usize) -> f64 {
    if let Geometry::Point(c) = geometry {
        return ((p.x - c.x).powi(2) + (p.y - c.y).powi(2)).sqrt();
    }
    brute_force_sdf_with(p, geometry, &boundary_samples(geometry, n))
}

/// [`brute_force_sdf`] against precomputed [`boundary_samples`] of `geometry`.
pub fn brute_force_sdf_with(p: Coord, geometry: &Geometry, samples: &[Coord]) -> f64 {
    let mut best = f64::INFINITY;
    for s in samples {
        let dx = p.x - s.x;
        let dy = p.y - s.y;
        best = best.min(dx * dx + dy * dy);
    }
    let d = best.sqrt();
    if geometry.has_interior() && inside_even_odd(p, geometry) {
        -d
    } else {
        d
    }
}

/// Roughly `n` points along the boundary, including every vertex.
pub fn boundary_samples(geometry: &Geometry, n: usize) -> Vec<Coord> {
    if let Geometry::Point(c) = geometry {
        return vec![*c];
    }
    let edges = geometry.edges();
    let perimeter: f64 = edges.iter().map(|(a, b)| a.distance(*b)).sum();
    let mut out = Vec::with_capacity(n + edges.len());
    for (a, b) in edges {
        let len = a.distance(b);
        let steps = ((n as f64) * len / perimeter).ceil().max(1.0) as usize;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            out.push(Coord::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t));
        }
    }
    out
}

/// Parity of horizontal-ray crossings, evaluated per member polygon.
pub fn inside_even_odd(p: Coord, geometry: &Geometry) -> bool {
    geometry.polygons().iter().any(|poly| {
        let mut crossings = 0usize;
        for ring in poly.rings() {
            let v = ring.vertices();
            let mut j = v.len() - 1;
            for i in 0..v.len() {
                let (a, b) = (v[i], v[j]);
                if (a.y > p.y) != (b.y > p.y) {
                    let x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                    if p.x < x_at {
                        crossings += 1;
                    }
                }
                j = i;
            }
        }
        crossings % 2 == 1
    })
}
