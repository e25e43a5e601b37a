use serde_json::{json, Map, Value};

use super::{BlockRecord, BuildingRecord, PlantRecord, UsageType};
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, GeoPolygon, GeoPolyline};

type Props = Map<String, Value>;

struct Feature<'a> {
    locus: String,
    geometry: &'a Value,
    props: &'a Props,
}

fn features<'a>(source: &'a str, doc: &'a Value) -> Result<Vec<Feature<'a>>> {
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::parse(source, "document", "expected a FeatureCollection"));
    }
    let list = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse(source, "document", "missing features array"))?;
    static EMPTY: std::sync::OnceLock<Props> = std::sync::OnceLock::new();
    list.iter()
        .enumerate()
        .map(|(i, f)| {
            let locus = format!("feature {i}");
            let geometry = f
                .get("geometry")
                .filter(|g| !g.is_null())
                .ok_or_else(|| Error::parse(source, &locus, "missing geometry"))?;
            let props = match f.get("properties") {
                Some(Value::Object(m)) => m,
                None | Some(Value::Null) => EMPTY.get_or_init(Props::new),
                Some(_) => return Err(Error::parse(source, &locus, "properties must be an object")),
            };
            Ok(Feature { locus, geometry, props })
        })
        .collect()
}

fn parse_doc(source: &str, text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::parse(source, "document", e.to_string()))
}

fn position(v: &Value) -> std::result::Result<GeoPoint, String> {
    let arr = v
        .as_array()
        .filter(|a| a.len() >= 2)
        .ok_or("position must be [lon, lat]")?;
    let lon = arr[0].as_f64().ok_or("longitude is not a number")?;
    let lat = arr[1].as_f64().ok_or("latitude is not a number")?;
    GeoPoint::new(lon, lat).map_err(|e| e.to_string())
}

fn ring(v: &Value) -> std::result::Result<Vec<GeoPoint>, String> {
    let pts = v
        .as_array()
        .ok_or("ring must be an array")?
        .iter()
        .map(position)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut distinct: Vec<&GeoPoint> = Vec::new();
    for p in &pts {
        if !distinct.contains(&p) {
            distinct.push(p);
        }
    }
    if distinct.len() < 3 {
        return Err("ring needs at least three distinct vertices".into());
    }
    Ok(pts)
}

fn polygon(v: &Value) -> std::result::Result<GeoPolygon, String> {
    let rings = v
        .as_array()
        .filter(|r| !r.is_empty())
        .ok_or("polygon needs at least one ring")?;
    Ok(GeoPolygon {
        exterior: ring(&rings[0])?,
        holes: rings[1..].iter().map(ring).collect::<std::result::Result<_, _>>()?,
    })
}

fn polygons(geometry: &Value) -> std::result::Result<Vec<GeoPolygon>, String> {
    let coords = geometry.get("coordinates").ok_or("geometry has no coordinates")?;
    match geometry.get("type").and_then(Value::as_str) {
        Some("Polygon") => Ok(vec![polygon(coords)?]),
        Some("MultiPolygon") => {
            let parts = coords
                .as_array()
                .filter(|p| !p.is_empty())
                .ok_or("multipolygon needs at least one polygon")?;
            parts.iter().map(polygon).collect()
        }
        other => Err(format!("expected Polygon or MultiPolygon geometry, found {other:?}")),
    }
}

fn opt_str(props: &Props, key: &str) -> std::result::Result<Option<String>, String> {
    match props.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        // numeric ids are common in exports
        Some(Value::Number(n)) => Ok(Some(n.to_string())),
        Some(_) => Err(format!("{key} must be a string")),
    }
}

fn req_str(props: &Props, key: &str) -> std::result::Result<String, String> {
    opt_str(props, key)?.ok_or_else(|| format!("missing required property {key}"))
}

fn opt_num(props: &Props, key: &str) -> std::result::Result<Option<f64>, String> {
    match props.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .map(Some)
            .ok_or_else(|| format!("{key} must be a number")),
    }
}

fn opt_year(props: &Props, key: &str) -> std::result::Result<Option<i32>, String> {
    match props.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => {
            let y = v.as_i64().ok_or_else(|| format!("{key} must be an integer"))?;
            if !(1500..=2100).contains(&y) {
                return Err(format!("{key} {y} outside 1500..=2100"));
            }
            Ok(Some(y as i32))
        }
    }
}

pub fn load_buildings(text: &str) -> Result<Vec<BuildingRecord>> {
    const SRC: &str = "buildings";
    let doc = parse_doc(SRC, text)?;
    features(SRC, &doc)?
        .into_iter()
        .map(|f| {
            let rec = (|| {
                let floor_area = opt_num(f.props, "floor_area_m2")?;
                if floor_area.is_some_and(|a| a <= 0.0) {
                    return Err("floor_area_m2 must be positive".to_string());
                }
                let annual_demand = opt_num(f.props, "annual_demand_kwh")?;
                if annual_demand.is_some_and(|d| d < 0.0) {
                    return Err("annual_demand_kwh must be non-negative".to_string());
                }
                Ok(BuildingRecord {
                    id: req_str(f.props, "id")?,
                    footprint: polygons(f.geometry)?,
                    usage_type: req_str(f.props, "usage_type")?.parse::<UsageType>()?,
                    floor_area,
                    annual_demand,
                    block_id: opt_str(f.props, "block_id")?,
                    construction_year: opt_year(f.props, "construction_year")?,
                })
            })();
            rec.map_err(|m| Error::parse(SRC, &f.locus, m))
        })
        .collect()
}

pub fn load_blocks(text: &str) -> Result<Vec<BlockRecord>> {
    const SRC: &str = "blocks";
    let doc = parse_doc(SRC, text)?;
    features(SRC, &doc)?
        .into_iter()
        .map(|f| {
            let rec = (|| {
                let p = opt_num(f.props, "connection_proportion")?;
                if p.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
                    return Err(format!("connection_proportion {} outside [0, 1]", p.unwrap()));
                }
                Ok(BlockRecord {
                    block_id: req_str(f.props, "block_id")?,
                    polygon: polygons(f.geometry)?,
                    connection_proportion: p,
                })
            })();
            rec.map_err(|m| Error::parse(SRC, &f.locus, m))
        })
        .collect()
}

pub fn load_plants(text: &str) -> Result<Vec<PlantRecord>> {
    const SRC: &str = "plants";
    let doc = parse_doc(SRC, text)?;
    features(SRC, &doc)?
        .into_iter()
        .map(|f| {
            let rec = (|| {
                if f.geometry.get("type").and_then(Value::as_str) != Some("Point") {
                    return Err("expected Point geometry".to_string());
                }
                let pos = position(f.geometry.get("coordinates").unwrap_or(&Value::Null))?;
                let capacity_kw = opt_num(f.props, "capacity_kw")?;
                if capacity_kw.is_some_and(|c| c <= 0.0) {
                    return Err("capacity_kw must be positive".to_string());
                }
                Ok(PlantRecord {
                    id: req_str(f.props, "id")?,
                    pos,
                    name: req_str(f.props, "name")?,
                    capacity_kw,
                    plant_type: opt_str(f.props, "plant_type")?,
                })
            })();
            rec.map_err(|m| Error::parse(SRC, &f.locus, m))
        })
        .collect()
}

fn ring_json(r: &[GeoPoint]) -> Value {
    Value::Array(r.iter().map(|p| json!([p.lon, p.lat])).collect())
}

fn polygon_json(p: &GeoPolygon) -> Value {
    let mut rings = vec![ring_json(&p.exterior)];
    rings.extend(p.holes.iter().map(|h| ring_json(h)));
    Value::Array(rings)
}

/// Writes building records in the same schema [`load_buildings`] reads.
pub fn buildings_to_geojson(buildings: &[BuildingRecord]) -> String {
    let features: Vec<Value> = buildings
        .iter()
        .map(|b| {
            let geometry = multi_json(&b.footprint);
            let mut props = Props::new();
            props.insert("id".into(), json!(b.id));
            props.insert("usage_type".into(), json!(b.usage_type.as_str()));
            if let Some(a) = b.floor_area {
                props.insert("floor_area_m2".into(), json!(a));
            }
            if let Some(d) = b.annual_demand {
                props.insert("annual_demand_kwh".into(), json!(d));
            }
            if let Some(k) = &b.block_id {
                props.insert("block_id".into(), json!(k));
            }
            if let Some(y) = b.construction_year {
                props.insert("construction_year".into(), json!(y));
            }
            json!({"type": "Feature", "geometry": geometry, "properties": props})
        })
        .collect();
    collection(features)
}

/// Writes block records in the schema [`load_blocks`] reads.
pub fn blocks_to_geojson(blocks: &[BlockRecord]) -> String {
    let features: Vec<Value> = blocks
        .iter()
        .map(|b| {
            let mut props = Props::new();
            props.insert("block_id".into(), json!(b.block_id));
            if let Some(p) = b.connection_proportion {
                props.insert("connection_proportion".into(), json!(p));
            }
            json!({"type": "Feature", "geometry": multi_json(&b.polygon), "properties": props})
        })
        .collect();
    collection(features)
}

/// Writes plant records in the schema [`load_plants`] reads.
pub fn plants_to_geojson(plants: &[PlantRecord]) -> String {
    let features: Vec<Value> = plants
        .iter()
        .map(|p| {
            let mut props = Props::new();
            props.insert("id".into(), json!(p.id));
            props.insert("name".into(), json!(p.name));
            if let Some(c) = p.capacity_kw {
                props.insert("capacity_kw".into(), json!(c));
            }
            if let Some(t) = &p.plant_type {
                props.insert("plant_type".into(), json!(t));
            }
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [p.pos.lon, p.pos.lat]},
                "properties": props,
            })
        })
        .collect();
    collection(features)
}

/// LineString features, one per polyline, with an `index` property.
pub fn polylines_to_geojson(lines: &[GeoPolyline]) -> String {
    let features: Vec<Value> = lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": ring_json(&l.points)},
                "properties": {"index": i},
            })
        })
        .collect();
    collection(features)
}

fn multi_json(parts: &[GeoPolygon]) -> Value {
    match parts {
        [single] => json!({"type": "Polygon", "coordinates": polygon_json(single)}),
        parts => json!({
            "type": "MultiPolygon",
            "coordinates": parts.iter().map(polygon_json).collect::<Vec<_>>(),
        }),
    }
}

fn collection(features: Vec<Value>) -> String {
    let mut s = serde_json::to_string_pretty(&json!({"type": "FeatureCollection", "features": features}))
        .expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "[[[7.0,51.5],[7.001,51.5],[7.001,51.501],[7.0,51.501],[7.0,51.5]]]";

    fn fc(features: &[String]) -> String {
        format!(r#"{{"type":"FeatureCollection","features":[{}]}}"#, features.join(","))
    }

    fn feature(geom: &str, props: &str) -> String {
        format!(r#"{{"type":"Feature","geometry":{geom},"properties":{props}}}"#)
    }

    #[test]
    fn building_record() {
        let text = fc(&[feature(
            &format!(r#"{{"type":"Polygon","coordinates":{SQUARE}}}"#),
            r#"{"id":"b1","usage_type":"residential","floor_area_m2":150}"#,
        )]);
        let b = load_buildings(&text).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].floor_area, Some(150.0));
        assert_eq!(b[0].usage_type, UsageType::Residential);
        assert_eq!(b[0].annual_demand, None);
    }

    #[test]
    fn building_errors_carry_locus() {
        let good = feature(
            &format!(r#"{{"type":"Polygon","coordinates":{SQUARE}}}"#),
            r#"{"id":"b1","usage_type":"office"}"#,
        );
        let bad = feature(
            &format!(r#"{{"type":"Polygon","coordinates":{SQUARE}}}"#),
            r#"{"id":"b2","usage_type":"office","floor_area_m2":-3}"#,
        );
        let err = load_buildings(&fc(&[good.clone(), bad])).unwrap_err().to_string();
        assert!(err.contains("feature 1"), "{err}");
        let missing = feature(
            &format!(r#"{{"type":"Polygon","coordinates":{SQUARE}}}"#),
            r#"{"id":"b3"}"#,
        );
        assert!(load_buildings(&fc(&[good, missing])).is_err());
    }

    #[test]
    fn block_proportion_range() {
        let text = fc(&[feature(
            &format!(r#"{{"type":"Polygon","coordinates":{SQUARE}}}"#),
            r#"{"block_id":"k1","connection_proportion":1.2}"#,
        )]);
        assert!(load_blocks(&text).is_err());
        let text = fc(&[feature(
            &format!(r#"{{"type":"Polygon","coordinates":{SQUARE}}}"#),
            r#"{"block_id":"k1"}"#,
        )]);
        assert_eq!(load_blocks(&text).unwrap()[0].connection_proportion, None);
    }

    #[test]
    fn plants() {
        let text = fc(&[feature(
            r#"{"type":"Point","coordinates":[7.0,51.5]}"#,
            r#"{"id":"p1","name":"HKW","capacity_kw":5000}"#,
        )]);
        let p = load_plants(&text).unwrap();
        assert_eq!(p[0].capacity_kw, Some(5000.0));
        let text = fc(&[feature(
            r#"{"type":"Point","coordinates":[7.0,51.5]}"#,
            r#"{"id":"p1","name":"x","capacity_kw":0}"#,
        )]);
        assert!(load_plants(&text).is_err());
    }

    #[test]
    fn multipolygon_round_trip() {
        let text = fc(&[feature(
            &format!(r#"{{"type":"MultiPolygon","coordinates":[{SQUARE},{SQUARE}]}}"#),
            r#"{"id":"m","usage_type":"other","block_id":"k","construction_year":1971,"annual_demand_kwh":1234.5}"#,
        )]);
        let recs = load_buildings(&text).unwrap();
        assert_eq!(recs[0].footprint.len(), 2);
        assert_eq!(load_buildings(&buildings_to_geojson(&recs)).unwrap(), recs);
    }
}
