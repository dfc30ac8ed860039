//! GeoJSON FeatureCollection reader and writer for the supported geometry subset.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use super::{Dataset, IngestError};
use crate::geometry::{Coord, GeoEntity, Geometry, Polygon, Polyline, Ring};

/// Parses a FeatureCollection (or a single Feature) into a [`Dataset`].
///
/// Entity ids come from the feature's `id` member when present, otherwise from its
/// index. An integer `label` property is recorded in the label map.
pub fn parse_geojson(text: &str) -> Result<Dataset, IngestError> {
    let root: Value = serde_json::from_str(text).map_err(|e| IngestError::Json(e.to_string()))?;
    let obj = as_object(&root, "document")?;
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .unwrap_or("dataset")
        .to_string();
    let features: Vec<&Value> = match type_of(obj)? {
        "FeatureCollection" => obj
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| IngestError::Json("FeatureCollection without `features` array".into()))?
            .iter()
            .collect(),
        "Feature" => vec![&root],
        other => return Err(IngestError::Unsupported(other.to_string())),
    };

    let mut entities = Vec::with_capacity(features.len());
    let mut labels = BTreeMap::new();
    for (idx, f) in features.into_iter().enumerate() {
        let f = as_object(f, "feature")?;
        if type_of(f)? != "Feature" {
            return Err(IngestError::Json(format!("features[{idx}] is not a Feature")));
        }
        let id = match f.get("id") {
            None | Some(Value::Null) => idx.to_string(),
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            Some(_) => {
                return Err(IngestError::Json(format!(
                    "features[{idx}].id must be a string or number"
                )))
            }
        };
        let geometry = f
            .get("geometry")
            .ok_or_else(|| IngestError::Json(format!("features[{idx}] has no geometry")))?;
        let geometry = parse_geometry(geometry)?;
        if let Some(props) = f.get("properties").and_then(Value::as_object) {
            match props.get("label") {
                None | Some(Value::Null) => {}
                Some(v) => {
                    let label = v.as_i64().ok_or_else(|| {
                        IngestError::Json(format!("features[{idx}].properties.label must be an integer"))
                    })?;
                    labels.insert(id.clone(), label);
                }
            }
        }
        entities.push(GeoEntity::new(id, geometry));
    }
    Dataset::new(name, entities, labels)
}

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>, IngestError> {
    v.as_object()
        .ok_or_else(|| IngestError::Json(format!("{what} must be an object")))
}

fn type_of(obj: &Map<String, Value>) -> Result<&str, IngestError> {
    obj.get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| IngestError::Json("missing `type` member".into()))
}

fn parse_geometry(v: &Value) -> Result<Geometry, IngestError> {
    let obj = as_object(v, "geometry")?;
    let kind = type_of(obj)?;
    let coords = || {
        obj.get("coordinates")
            .ok_or_else(|| IngestError::Json(format!("{kind} without coordinates")))
    };
    match kind {
        "Point" => Ok(Geometry::point(position(coords()?)?)?),
        "LineString" => Ok(Geometry::Polyline(Polyline::new(positions(coords()?)?)?)),
        "Polygon" => Ok(Geometry::Polygon(polygon(coords()?)?)),
        "MultiPolygon" => {
            let polys = array(coords()?)?
                .iter()
                .map(polygon)
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Geometry::multi_polygon(polys)?)
        }
        other => Err(IngestError::Unsupported(other.to_string())),
    }
}

fn array(v: &Value) -> Result<&Vec<Value>, IngestError> {
    v.as_array()
        .ok_or_else(|| IngestError::Json("expected an array".into()))
}

fn position(v: &Value) -> Result<Coord, IngestError> {
    match array(v)?.as_slice() {
        [x, y] => match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => Ok(Coord::new(x, y)),
            _ => Err(IngestError::Json("position members must be numbers".into())),
        },
        other => Err(IngestError::Json(format!(
            "position must have exactly 2 members, found {}",
            other.len()
        ))),
    }
}

fn positions(v: &Value) -> Result<Vec<Coord>, IngestError> {
    array(v)?.iter().map(position).collect()
}

fn polygon(v: &Value) -> Result<Polygon, IngestError> {
    let rings = array(v)?;
    let (first, rest) = rings
        .split_first()
        .ok_or_else(|| IngestError::Json("polygon without rings".into()))?;
    let exterior = Ring::new(positions(first)?)?;
    let holes = rest
        .iter()
        .map(|r| Ok(Ring::new(positions(r)?)?))
        .collect::<Result<Vec<_>, IngestError>>()?;
    Ok(Polygon::new(exterior, holes)?)
}

fn ring_json(r: &Ring) -> Value {
    let v = r.vertices();
    Value::Array(
        v.iter()
            .chain(std::iter::once(&v[0]))
            .map(|c| json!([c.x, c.y]))
            .collect(),
    )
}

fn polygon_json(p: &Polygon) -> Value {
    Value::Array(p.rings().map(ring_json).collect())
}

fn geometry_json(g: &Geometry) -> Value {
    match g {
        Geometry::Point(c) => json!({"type": "Point", "coordinates": [c.x, c.y]}),
        Geometry::Polyline(l) => json!({
            "type": "LineString",
            "coordinates": l.vertices().iter().map(|c| json!([c.x, c.y])).collect::<Vec<_>>(),
        }),
        Geometry::Polygon(p) => json!({"type": "Polygon", "coordinates": polygon_json(p)}),
        Geometry::MultiPolygon(ps) => json!({
            "type": "MultiPolygon",
            "coordinates": ps.iter().map(polygon_json).collect::<Vec<_>>(),
        }),
    }
}

/// Serializes a dataset as a FeatureCollection with closed rings.
pub fn to_geojson(d: &Dataset) -> String {
    let features: Vec<Value> = d
        .entities()
        .iter()
        .map(|e| {
            let mut props = Map::new();
            if let Some(l) = d.label(&e.id) {
                props.insert("label".into(), json!(l));
            }
            json!({
                "type": "Feature",
                "id": e.id,
                "geometry": geometry_json(&e.geometry),
                "properties": props,
            })
        })
        .collect();
    let doc = json!({
        "type": "FeatureCollection",
        "name": d.name,
        "features": features,
    });
    serde_json::to_string(&doc).expect("serializing a Value cannot fail")
}
