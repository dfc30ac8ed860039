#![allow(dead_code)]

pub mod fd;

use std::f64::consts::TAU;

use geo2vec::geometry::{Coord, GeoEntity, Geometry, Polygon, Polyline};
use rand::Rng;

/// Star-shaped CCW ring around `center`.
pub fn star<R: Rng>(rng: &mut R, center: Coord, radius: f64, n: usize) -> Vec<Coord> {
    let mut angles: Vec<f64> = (0..n).map(|i| (i as f64 + rng.random_range(0.1..0.9)) * TAU / n as f64).collect();
    angles.sort_by(f64::total_cmp);
    angles
        .into_iter()
        .map(|a| {
            let r = radius * rng.random_range(0.5..1.0);
            Coord::new(center.x + r * a.cos(), center.y + r * a.sin())
        })
        .collect()
}

pub fn random_polygon<R: Rng>(rng: &mut R, center: Coord, radius: f64) -> Polygon {
    let n = rng.random_range(3..10);
    let ext = star(rng, center, radius, n);
    let holes = if n >= 6 && rng.random_bool(0.5) {
        vec![star(rng, center, radius * 0.1, 4)]
    } else {
        vec![]
    };
    Polygon::from_rings(ext, holes).expect("star rings are valid")
}

pub fn random_polyline<R: Rng>(rng: &mut R, center: Coord, radius: f64) -> Polyline {
    let n = rng.random_range(2..7);
    let pts = (0..n)
        .map(|_| {
            Coord::new(
                center.x + rng.random_range(-radius..radius),
                center.y + rng.random_range(-radius..radius),
            )
        })
        .collect();
    Polyline::new(pts).expect("random points are distinct")
}

/// Any of the four geometry kinds, near the origin with unit-ish size.
pub fn random_geometry<R: Rng>(rng: &mut R) -> Geometry {
    let c = Coord::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let r = rng.random_range(0.3..2.0);
    match rng.random_range(0..4) {
        0 => Geometry::Point(c),
        1 => Geometry::Polyline(random_polyline(rng, c, r)),
        2 => Geometry::Polygon(random_polygon(rng, c, r)),
        _ => {
            let a = random_polygon(rng, c, r);
            let b = random_polygon(rng, Coord::new(c.x + 3.0 * r, c.y), r);
            Geometry::multi_polygon(vec![a, b]).expect("members are apart")
        }
    }
}

pub fn random_entity<R: Rng>(rng: &mut R, id: usize) -> GeoEntity {
    GeoEntity::new(format!("e{id}"), random_geometry(rng))
}

/// Random entity with edges (no points).
pub fn random_shape<R: Rng>(rng: &mut R, id: usize) -> GeoEntity {
    loop {
        let g = random_geometry(rng);
        if !matches!(g, Geometry::Point(_)) {
            return GeoEntity::new(format!("e{id}"), g);
        }
    }
}

/// Standard normal CDF (Abramowitz-Stegun 7.1.26 erf, error < 1.5e-7).
pub fn normal_cdf(x: f64) -> f64 {
    let z = x.abs() / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.327_591_1 * z);
    let poly = t * (0.254_829_592 + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    let erf = 1.0 - poly * (-z * z).exp();
    if x >= 0.0 {
        0.5 * (1.0 + erf)
    } else {
        0.5 * (1.0 - erf)
    }
}

/// One-sample Kolmogorov-Smirnov statistic against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov p-value for statistic `d` over `n` samples.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = 2.0 * (-1f64).powi(j as i32 - 1) * (-2.0 * j * j * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}
