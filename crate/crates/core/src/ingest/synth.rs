//! Seeded synthetic datasets: labeled building-like footprints and scattered mixed entities.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, IngestError};
use crate::geometry::{
    min_entity_distance, point_in_polygon, segments_intersect, BBox, Coord, GeoEntity, Geometry,
    GeometryKind, Polygon, Polyline, Ring,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthesisKind {
    Shapes,
    Scattered,
}

/// Parameters of a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSpec {
    pub kind: SynthesisKind,
    /// Family names for `shapes`; entity kinds (`point`, `polyline`, `polygon`) for `scattered`.
    pub classes: Vec<String>,
    pub count_per_class: usize,
    /// Std-dev of template vertex jitter, in template units (templates span 1).
    #[serde(default)]
    pub vertex_noise: f64,
    /// Rotation drawn uniformly from this range, radians.
    pub rotation_range: [f64; 2],
    /// Entity extent drawn uniformly from this range, placement units.
    pub scale_range: [f64; 2],
    pub placement: BBox,
    /// Fraction of scattered entities deliberately placed to meet an earlier one.
    #[serde(default)]
    pub overlap_fraction: f64,
    pub seed: u64,
}

impl SynthesisSpec {
    /// 5 families x `count` footprints with full rotation.
    pub fn shapes(count: usize, seed: u64) -> Self {
        SynthesisSpec {
            kind: SynthesisKind::Shapes,
            classes: Family::ALL.iter().map(|f| f.name().to_string()).collect(),
            count_per_class: count,
            vertex_noise: 0.01,
            rotation_range: [0.0, 2.0 * PI],
            scale_range: [20.0, 60.0],
            placement: BBox::new(Coord::new(0.0, 0.0), Coord::new(1000.0, 1000.0)),
            overlap_fraction: 0.0,
            seed,
        }
    }

    /// Points, polylines and polygons, `count` of each.
    pub fn scattered(count: usize, overlap_fraction: f64, seed: u64) -> Self {
        SynthesisSpec {
            kind: SynthesisKind::Scattered,
            classes: vec!["polygon".into(), "polyline".into(), "point".into()],
            count_per_class: count,
            vertex_noise: 0.0,
            rotation_range: [0.0, 2.0 * PI],
            scale_range: [3.0, 8.0],
            placement: BBox::new(Coord::new(0.0, 0.0), Coord::new(100.0, 100.0)),
            overlap_fraction,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |field, message: &str| {
            Err(IngestError::Spec {
                field,
                message: message.to_string(),
            })
        };
        if self.count_per_class == 0 {
            return bad("count_per_class", "must be at least 1");
        }
        if self.classes.is_empty() {
            return bad("classes", "must name at least one class");
        }
        for (i, c) in self.classes.iter().enumerate() {
            if self.classes[..i].contains(c) {
                return bad("classes", &format!("duplicate class `{c}`"));
            }
            let known = match self.kind {
                SynthesisKind::Shapes => Family::from_name(c).is_some(),
                SynthesisKind::Scattered => matches!(c.as_str(), "point" | "polyline" | "polygon"),
            };
            if !known {
                return bad("classes", &format!("unknown class `{c}`"));
            }
        }
        if !(self.vertex_noise >= 0.0 && self.vertex_noise < 0.1) {
            return bad("vertex_noise", "must lie in [0, 0.1)");
        }
        let [r0, r1] = self.rotation_range;
        if !(r0.is_finite() && r1.is_finite() && r0 <= r1) {
            return bad("rotation_range", "must be finite and ordered");
        }
        let [s0, s1] = self.scale_range;
        if !(s0 > 0.0 && s1.is_finite() && s0 <= s1) {
            return bad("scale_range", "must be positive and ordered");
        }
        let p = &self.placement;
        if !(p.min.is_finite() && p.max.is_finite() && p.min.x < p.max.x && p.min.y < p.max.y) {
            return bad("placement", "must be a finite box with positive area");
        }
        if !(0.0..=1.0).contains(&self.overlap_fraction) {
            return bad("overlap_fraction", "must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Building-footprint families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Rectangle,
    LShape,
    TShape,
    EShape,
    Cross,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Rectangle,
        Family::LShape,
        Family::TShape,
        Family::EShape,
        Family::Cross,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Rectangle => "rectangle",
            Family::LShape => "l-shape",
            Family::TShape => "t-shape",
            Family::EShape => "e-shape",
            Family::Cross => "cross",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn label(self) -> i64 {
        Family::ALL.iter().position(|&f| f == self).unwrap() as i64
    }

    /// Counter-clockwise template in the unit square.
    pub fn template(self) -> Vec<Coord> {
        let pts: &[(f64, f64)] = match self {
            Family::Rectangle => &[(0.0, 0.2), (1.0, 0.2), (1.0, 0.8), (0.0, 0.8)],
            Family::LShape => &[
                (0.0, 0.0),
                (1.0, 0.0),
                (1.0, 0.4),
                (0.4, 0.4),
                (0.4, 1.0),
                (0.0, 1.0),
            ],
            Family::TShape => &[
                (0.35, 0.0),
                (0.65, 0.0),
                (0.65, 0.7),
                (1.0, 0.7),
                (1.0, 1.0),
                (0.0, 1.0),
                (0.0, 0.7),
                (0.35, 0.7),
            ],
            Family::EShape => &[
                (0.0, 0.0),
                (1.0, 0.0),
                (1.0, 0.2),
                (0.3, 0.2),
                (0.3, 0.4),
                (0.8, 0.4),
                (0.8, 0.6),
                (0.3, 0.6),
                (0.3, 0.8),
                (1.0, 0.8),
                (1.0, 1.0),
                (0.0, 1.0),
            ],
            Family::Cross => &[
                (1.0 / 3.0, 0.0),
                (2.0 / 3.0, 0.0),
                (2.0 / 3.0, 1.0 / 3.0),
                (1.0, 1.0 / 3.0),
                (1.0, 2.0 / 3.0),
                (2.0 / 3.0, 2.0 / 3.0),
                (2.0 / 3.0, 1.0),
                (1.0 / 3.0, 1.0),
                (1.0 / 3.0, 2.0 / 3.0),
                (0.0, 2.0 / 3.0),
                (0.0, 1.0 / 3.0),
                (1.0 / 3.0, 1.0 / 3.0),
            ],
        };
        pts.iter().map(|&(x, y)| Coord::new(x - 0.5, y - 0.5)).collect()
    }
}

/// Dispatches on [`SynthesisSpec::kind`].
pub fn synthesize(spec: &SynthesisSpec) -> Result<Dataset, IngestError> {
    match spec.kind {
        SynthesisKind::Shapes => synthesize_shapes(spec),
        SynthesisKind::Scattered => synthesize_scattered(spec),
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Labeled footprints: jittered, rotated, scaled and placed family templates.
pub fn synthesize_shapes(spec: &SynthesisSpec) -> Result<Dataset, IngestError> {
    spec.validate()?;
    if spec.kind != SynthesisKind::Shapes {
        return Err(IngestError::Spec {
            field: "kind",
            message: "expected `shapes`".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let jitter = Normal::new(0.0, spec.vertex_noise.max(0.0)).unwrap();
    let mut entities = Vec::new();
    let mut labels = BTreeMap::new();
    for name in &spec.classes {
        let family = Family::from_name(name).unwrap();
        for i in 0..spec.count_per_class {
            let template = family.template();
            let ring = loop {
                let jittered: Vec<Coord> = template
                    .iter()
                    .map(|&v| {
                        if spec.vertex_noise > 0.0 {
                            v + Coord::new(jitter.sample(&mut rng), jitter.sample(&mut rng))
                        } else {
                            v
                        }
                    })
                    .collect();
                if let Ok(r) = Ring::new(jittered) {
                    if r.len() == template.len() && is_simple(r.vertices()) {
                        break r;
                    }
                }
            };
            let angle = uniform(&mut rng, spec.rotation_range);
            let scale = uniform(&mut rng, spec.scale_range);
            let center = Coord::new(
                rng.random_range(spec.placement.min.x..spec.placement.max.x),
                rng.random_range(spec.placement.min.y..spec.placement.max.y),
            );
            let placed: Vec<Coord> = ring
                .vertices()
                .iter()
                .map(|&v| v.rotate(angle) * scale + center)
                .collect();
            let poly = Polygon::from_rings(placed, vec![])?;
            let id = format!("{}-{i:04}", family.name());
            labels.insert(id.clone(), family.label());
            entities.push(GeoEntity::new(id, Geometry::Polygon(poly)));
        }
    }
    Dataset::new("synthetic-shapes", entities, labels)
}

/// True when no two non-adjacent edges of the closed ring touch.
pub(crate) fn is_simple(v: &[Coord]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Mixed points, polylines and polygons. A fraction `overlap_fraction` of entities is
/// placed to touch, cross or sit inside an earlier entity; the rest are kept disjoint
/// from everything placed before them.
pub fn synthesize_scattered(spec: &SynthesisSpec) -> Result<Dataset, IngestError> {
    spec.validate()?;
    if spec.kind != SynthesisKind::Scattered {
        return Err(IngestError::Spec {
            field: "kind",
            message: "expected `scattered`".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let order: Vec<GeometryKind> = [GeometryKind::Polygon, GeometryKind::Polyline, GeometryKind::Point]
        .into_iter()
        .filter(|k| spec.classes.iter().any(|c| c == kind_name(*k)))
        .collect();
    let mut placed: Vec<GeoEntity> = Vec::new();
    for i in 0..spec.count_per_class {
        for &kind in &order {
            let id = format!("{}-{i:04}", kind_prefix(kind));
            let want_overlap = spec.overlap_fraction > 0.0
                && rng.random::<f64>() < spec.overlap_fraction
                && placed.iter().any(|e| e.kind() != GeometryKind::Point);
            let geometry = if want_overlap {
                overlapping(&mut rng, spec, kind, &placed)
            } else {
                disjoint(&mut rng, spec, kind, &placed)
            };
            placed.push(GeoEntity::new(id, geometry));
        }
    }
    Dataset::new("synthetic-scattered", placed, BTreeMap::new())
}

fn kind_name(k: GeometryKind) -> &'static str {
    match k {
        GeometryKind::Point => "point",
        GeometryKind::Polyline => "polyline",
        _ => "polygon",
    }
}

fn kind_prefix(k: GeometryKind) -> &'static str {
    match k {
        GeometryKind::Point => "pt",
        GeometryKind::Polyline => "pl",
        _ => "pg",
    }
}

fn random_shape(
    rng: &mut ChaCha8Rng,
    spec: &SynthesisSpec,
    kind: GeometryKind,
    anchor: Coord,
    size: f64,
) -> Geometry {
    let angle = uniform(rng, spec.rotation_range);
    match kind {
        GeometryKind::Point => Geometry::Point(anchor),
        GeometryKind::Polyline => {
            let n = rng.random_range(2..=10usize);
            let step = size / (n - 1) as f64;
            let mut heading = angle;
            let mut p = anchor;
            let mut pts = vec![p];
            for _ in 1..n {
                let len = step * rng.random_range(0.6..1.0);
                p = p + Coord::new(heading.cos(), heading.sin()) * len;
                pts.push(p);
                heading += rng.random_range(-0.9..0.9);
            }
            Geometry::Polyline(Polyline::new(pts).expect("steps are non-zero"))
        }
        _ => {
            let m = rng.random_range(5..=8usize);
            let radius = 0.5 * size;
            let pts: Vec<Coord> = (0..m)
                .map(|k| {
                    let theta = angle + 2.0 * PI * (k as f64 + rng.random_range(-0.3..0.3)) / m as f64;
                    let r = radius * rng.random_range(0.55..1.0);
                    anchor + Coord::new(theta.cos(), theta.sin()) * r
                })
                .collect();
            Geometry::Polygon(Polygon::from_rings(pts, vec![]).expect("star polygon is valid"))
        }
    }
}

fn separated(g: &Geometry, others: &[GeoEntity], gap: f64) -> bool {
    let bb = g.bbox();
    others.iter().all(|o| {
        if o.geometry.bbox().distance(&bb) > gap {
            return true;
        }
        if min_entity_distance(g, &o.geometry) <= gap {
            return false;
        }
        let nested = |a: &Geometry, b: &Geometry| {
            let v = a.vertices()[0];
            b.polygons().iter().any(|p| point_in_polygon(v, p))
        };
        !nested(g, &o.geometry) && !nested(&o.geometry, g)
    })
}

fn disjoint(
    rng: &mut ChaCha8Rng,
    spec: &SynthesisSpec,
    kind: GeometryKind,
    placed: &[GeoEntity],
) -> Geometry {
    let area = &spec.placement;
    let mut size = uniform(rng, spec.scale_range);
    let mut tries = 0usize;
    loop {
        let anchor = Coord::new(
            rng.random_range(area.min.x..area.max.x),
            rng.random_range(area.min.y..area.max.y),
        );
        let g = random_shape(rng, spec, kind, anchor, size);
        if separated(&g, placed, 1e-3 * spec.scale_range[0]) {
            return g;
        }
        tries += 1;
        if tries % 50 == 0 {
            size *= 0.8;
        }
    }
}

fn overlapping(
    rng: &mut ChaCha8Rng,
    spec: &SynthesisSpec,
    kind: GeometryKind,
    placed: &[GeoEntity],
) -> Geometry {
    let targets: Vec<&GeoEntity> = placed
        .iter()
        .filter(|e| e.kind() != GeometryKind::Point)
        .collect();
    let target = &targets[rng.random_range(0..targets.len())].geometry;
    let anchor = match target {
        Geometry::Polyline(l) => {
            let edges: Vec<_> = l.edges().collect();
            let (a, b) = edges[rng.random_range(0..edges.len())];
            a + (b - a) * rng.random_range(0.1..0.9)
        }
        _ => interior_point(rng, target),
    };
    let size = uniform(rng, spec.scale_range);
    random_shape(rng, spec, kind, anchor, size)
}

fn interior_point(rng: &mut ChaCha8Rng, g: &Geometry) -> Coord {
    let b = g.bbox();
    let poly = &g.polygons()[0];
    for _ in 0..10_000 {
        let p = Coord::new(
            rng.random_range(b.min.x..=b.max.x),
            rng.random_range(b.min.y..=b.max.y),
        );
        if point_in_polygon(p, poly) {
            return p;
        }
    }
    b.center()
}
