//! Exact topological relations between entity pairs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{min_entity_distance, sdf, GeoEntity, Geometry, GeometryKind};

/// Boundary distance at or below which two entities are considered in contact.
pub const CONTACT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopoLabel {
    Disjoint,
    Intersects,
    TouchesOrCrosses,
    Within,
    Contains,
}

impl TopoLabel {
    pub fn name(self) -> &'static str {
        match self {
            TopoLabel::Disjoint => "disjoint",
            TopoLabel::Intersects => "intersects",
            TopoLabel::TouchesOrCrosses => "touches-or-crosses",
            TopoLabel::Within => "within",
            TopoLabel::Contains => "contains",
        }
    }
}

impl fmt::Display for TopoLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered geometry-type combination of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PairKind {
    PtPl,
    PtPg,
    PlPl,
    PlPg,
    PgPg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Coarse {
    Pt,
    Pl,
    Pg,
}

fn coarse(k: GeometryKind) -> Coarse {
    match k {
        GeometryKind::Point => Coarse::Pt,
        GeometryKind::Polyline => Coarse::Pl,
        GeometryKind::Polygon | GeometryKind::MultiPolygon => Coarse::Pg,
    }
}

impl PairKind {
    pub const ALL: [PairKind; 5] = [
        PairKind::PtPl,
        PairKind::PtPg,
        PairKind::PlPl,
        PairKind::PlPg,
        PairKind::PgPg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PairKind::PtPl => "pt-pl",
            PairKind::PtPg => "pt-pg",
            PairKind::PlPl => "pl-pl",
            PairKind::PlPg => "pl-pg",
            PairKind::PgPg => "pg-pg",
        }
    }

    pub fn from_name(s: &str) -> Option<PairKind> {
        PairKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// The combination of `(a, b)` in this order, if it is one of the five.
    pub fn of(a: GeometryKind, b: GeometryKind) -> Option<PairKind> {
        match (coarse(a), coarse(b)) {
            (Coarse::Pt, Coarse::Pl) => Some(PairKind::PtPl),
            (Coarse::Pt, Coarse::Pg) => Some(PairKind::PtPg),
            (Coarse::Pl, Coarse::Pl) => Some(PairKind::PlPl),
            (Coarse::Pl, Coarse::Pg) => Some(PairKind::PlPg),
            (Coarse::Pg, Coarse::Pg) => Some(PairKind::PgPg),
            _ => None,
        }
    }

    /// Kinds of the first and second member.
    pub fn members(self) -> (fn(GeometryKind) -> bool, fn(GeometryKind) -> bool) {
        fn pt(k: GeometryKind) -> bool {
            coarse(k) == Coarse::Pt
        }
        fn pl(k: GeometryKind) -> bool {
            coarse(k) == Coarse::Pl
        }
        fn pg(k: GeometryKind) -> bool {
            coarse(k) == Coarse::Pg
        }
        match self {
            PairKind::PtPl => (pt, pl),
            PairKind::PtPg => (pt, pg),
            PairKind::PlPl => (pl, pl),
            PairKind::PlPg => (pl, pg),
            PairKind::PgPg => (pg, pg),
        }
    }

    pub fn is_binary(self) -> bool {
        matches!(self, PairKind::PtPl | PairKind::PtPg | PairKind::PlPl)
    }

    /// Labels that can occur for this combination. A polyline cannot contain a polygon,
    /// so that class is absent for `pl-pg`.
    pub fn vocabulary(self) -> &'static [TopoLabel] {
        match self {
            PairKind::PtPl | PairKind::PtPg | PairKind::PlPl => &[TopoLabel::Disjoint, TopoLabel::Intersects],
            PairKind::PlPg => &[TopoLabel::Disjoint, TopoLabel::TouchesOrCrosses, TopoLabel::Within],
            PairKind::PgPg => &[
                TopoLabel::Disjoint,
                TopoLabel::TouchesOrCrosses,
                TopoLabel::Within,
                TopoLabel::Contains,
            ],
        }
    }
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(PartialEq)]
enum Cover {
    None,
    Some,
    All,
}

fn covered(g: &Geometry, by: &Geometry) -> Cover {
    if !by.has_interior() {
        return Cover::None;
    }
    let verts = g.vertices();
    let n = verts.iter().filter(|&&p| sdf(p, by) < 0.0).count();
    match n {
        0 => Cover::None,
        n if n == verts.len() => Cover::All,
        _ => Cover::Some,
    }
}

/// Multiclass relation of `a` to `b`: boundary contact, strict nesting either way, or
/// disjoint. Binary combinations collapse everything but `Disjoint` to `Intersects`.
///
/// With boundaries apart, every connected part of one entity lies wholly inside or
/// outside the other, so vertex containment decides nesting. Partial nesting (a
/// multipolygon straddling) counts as `TouchesOrCrosses`.
pub fn topology_ground_truth(a: &GeoEntity, b: &GeoEntity) -> TopoLabel {
    let (ga, gb) = (&a.geometry, &b.geometry);
    let full = if min_entity_distance(ga, gb) <= CONTACT_TOL {
        TopoLabel::TouchesOrCrosses
    } else {
        match (covered(gb, ga), covered(ga, gb)) {
            (Cover::All, _) => TopoLabel::Contains,
            (_, Cover::All) => TopoLabel::Within,
            (Cover::None, Cover::None) => TopoLabel::Disjoint,
            _ => TopoLabel::TouchesOrCrosses,
        }
    };
    match PairKind::of(a.kind(), b.kind()) {
        Some(k) if k.is_binary() && full != TopoLabel::Disjoint => TopoLabel::Intersects,
        _ => full,
    }
}
