//! GeoJSON (RFC 7946) input: FeatureCollections of Polygon / MultiPolygon
//! features, interpreted as EPSG:4326 lon/lat.
//!
//! Feature ids come from the `id` member, then `properties.id`, then a
//! generated `feat-<index>`. MultiPolygon parts are split into separate
//! polygons with `#<part>` suffixes. Interior rings are not modeled; they
//! are dropped and counted. Invalid features are skipped and reported, not
//! fatal.

use std::collections::BTreeMap;
use std::io::Read;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::PVPolygon;

/// Parse outcome: accepted polygons plus a report of what was dropped.
#[derive(Debug, Clone, Default)]
pub struct ParsedPolygons {
    pub polygons: Vec<PVPolygon>,
    pub interior_rings_ignored: usize,
    pub skipped: Vec<SkippedFeature>,
}

/// A feature (or feature part) that could not be turned into a polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedFeature {
    pub id: String,
    pub reason: String,
}

/// Parse a GeoJSON FeatureCollection document.
pub fn parse_polygons(mut reader: impl Read) -> Result<ParsedPolygons> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;

    let doc: Value = serde_json::from_slice(&bytes).map_err(|e| Error::GeoJson {
        offset: byte_offset(&bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;

    let root_error = |message: &str| Error::GeoJson {
        offset: 0,
        message: message.to_string(),
    };
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(root_error("expected a FeatureCollection"));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| root_error("missing `features` array"))?;

    let mut out = ParsedPolygons::default();
    for (index, feature) in features.iter().enumerate() {
        let id = feature_id(feature, index);
        let properties = feature
            .get("properties")
            .and_then(Value::as_object)
            .map(|m| m.iter().map(|(k, v)| (k.clone(), v.clone())).collect())
            .unwrap_or_default();

        let Some(geometry) = feature.get("geometry").filter(|g| !g.is_null()) else {
            out.skipped.push(SkippedFeature {
                id,
                reason: "missing geometry".into(),
            });
            continue;
        };
        match geometry.get("type").and_then(Value::as_str) {
            Some("Polygon") => {
                add_polygon_rings(geometry.get("coordinates"), id, properties, &mut out);
            }
            Some("MultiPolygon") => {
                let Some(parts) = geometry.get("coordinates").and_then(Value::as_array) else {
                    out.skipped.push(SkippedFeature {
                        id,
                        reason: "missing coordinates".into(),
                    });
                    continue;
                };
                for (part_index, part) in parts.iter().enumerate() {
                    let part_id = format!("{id}#{part_index}");
                    add_polygon_rings(Some(part), part_id, properties.clone(), &mut out);
                }
            }
            Some(other) => out.skipped.push(SkippedFeature {
                id,
                reason: format!("unsupported geometry type `{other}`"),
            }),
            None => out.skipped.push(SkippedFeature {
                id,
                reason: "geometry without a type".into(),
            }),
        }
    }
    Ok(out)
}

/// One polygon's ring array: exterior first, interiors dropped and counted.
fn add_polygon_rings(
    coordinates: Option<&Value>,
    id: String,
    properties: BTreeMap<String, Value>,
    out: &mut ParsedPolygons,
) {
    let Some(rings) = coordinates.and_then(Value::as_array) else {
        out.skipped.push(SkippedFeature {
            id,
            reason: "missing coordinates".into(),
        });
        return;
    };
    let Some(exterior) = rings.first() else {
        out.skipped.push(SkippedFeature {
            id,
            reason: "polygon without rings".into(),
        });
        return;
    };
    out.interior_rings_ignored += rings.len().saturating_sub(1);

    let Some(ring) = parse_ring(exterior) else {
        out.skipped.push(SkippedFeature {
            id,
            reason: "invalid coordinate values".into(),
        });
        return;
    };
    match PVPolygon::new(id.clone(), ring, properties) {
        Ok(polygon) => out.polygons.push(polygon),
        Err(e) => out.skipped.push(SkippedFeature {
            id,
            reason: e.to_string(),
        }),
    }
}

fn parse_ring(value: &Value) -> Option<Vec<(f64, f64)>> {
    let positions = value.as_array()?;
    let mut ring = Vec::with_capacity(positions.len());
    for position in positions {
        let coords = position.as_array()?;
        if coords.len() < 2 {
            return None;
        }
        ring.push((coords[0].as_f64()?, coords[1].as_f64()?));
    }
    Some(ring)
}

fn feature_id(feature: &Value, index: usize) -> String {
    let from_value = |v: &Value| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    };
    feature
        .get("id")
        .and_then(from_value)
        .or_else(|| {
            feature
                .get("properties")
                .and_then(|p| p.get("id"))
                .and_then(from_value)
        })
        .unwrap_or_else(|| format!("feat-{index}"))
}

/// Translate serde's 1-based line/column into a byte offset.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut remaining_newlines = line - 1;
    let mut offset = 0usize;
    for (i, &b) in bytes.iter().enumerate() {
        if remaining_newlines == 0 {
            break;
        }
        if b == b'\n' {
            remaining_newlines -= 1;
            offset = i + 1;
        }
    }
    (offset + column.saturating_sub(1)).min(bytes.len())
}

/// Rebuild a polygon as a GeoJSON feature, echoing its properties and
/// merging `extra` on top (extraction outputs win over input keys).
pub fn polygon_to_feature(polygon: &PVPolygon, extra: serde_json::Map<String, Value>) -> Value {
    let ring: Vec<Value> = polygon
        .exterior()
        .iter()
        .map(|&(lon, lat)| serde_json::json!([lon, lat]))
        .collect();
    let mut properties = serde_json::Map::new();
    for (k, v) in polygon.properties() {
        properties.insert(k.clone(), v.clone());
    }
    for (k, v) in extra {
        properties.insert(k, v);
    }
    serde_json::json!({
        "type": "Feature",
        "id": polygon.id(),
        "geometry": { "type": "Polygon", "coordinates": [ring] },
        "properties": properties,
    })
}
