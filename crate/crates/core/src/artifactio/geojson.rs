use serde_json::{json, Map, Value};

use super::document::{geo_of, rebuild, EdgeDoc};
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, Projection};
use crate::model::{Model, Provenance};
use crate::netgraph::{Node, NodeAttrs, NodeKind};

/// RFC 7946 FeatureCollection: one Point per node (sorted by id), then one
/// LineString per edge (sorted by endpoint ids). The projection origin and
/// provenance ride along as foreign members.
pub fn export_geojson(model: &Model) -> String {
    let proj = &model.projection;
    let g = &model.graph;
    let mut features: Vec<Value> = Vec::with_capacity(g.node_count() + g.edge_count());
    for n in g.nodes() {
        let geo = geo_of(proj, n);
        let mut props = Map::new();
        props.insert("id".into(), json!(n.id));
        props.insert("kind".into(), json!(n.kind));
        if let Value::Object(attrs) = serde_json::to_value(&n.attrs).expect("serializable") {
            props.extend(attrs);
        }
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [geo.lon, geo.lat]},
            "properties": props,
        }));
    }
    let mut edges: Vec<_> = g.edges().map(|(_, e)| e).collect();
    edges.sort_by(|a, b| {
        let key = |e: &&crate::netgraph::PipeEdge| {
            if e.u <= e.v {
                (e.u.clone(), e.v.clone())
            } else {
                (e.v.clone(), e.u.clone())
            }
        };
        key(a).cmp(&key(b))
    });
    for e in edges {
        let (a, b) = (geo_of(proj, g.node(&e.u).unwrap()), geo_of(proj, g.node(&e.v).unwrap()));
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [[a.lon, a.lat], [b.lon, b.lat]]},
            "properties": EdgeDoc::from_edge(e),
        }));
    }
    let mut s = serde_json::to_string_pretty(&json!({
        "type": "FeatureCollection",
        "projection_origin": proj.origin,
        "provenance": model.provenance,
        "features": features,
    }))
    .expect("serializable");
    s.push('\n');
    s
}

/// Reads a FeatureCollection written by [`export_geojson`] back into a model.
pub fn import_geojson(text: &str) -> Result<Model> {
    let doc: Value = serde_json::from_str(text)?;
    let bad = |locus: &str, m: &str| Error::parse("model geojson", locus, m);
    let origin: GeoPoint = serde_json::from_value(doc.get("projection_origin").cloned().unwrap_or(Value::Null))
        .map_err(|e| bad("document", &format!("projection_origin: {e}")))?;
    let projection = Projection::new(origin)?;
    let provenance: Provenance = match doc.get("provenance") {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| bad("document", &e.to_string()))?,
        None => Provenance::default(),
    };
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("document", "missing features"))?;
    let (mut nodes, mut edges) = (Vec::new(), Vec::new());
    for (i, f) in features.iter().enumerate() {
        let locus = format!("feature {i}");
        let props = f.get("properties").cloned().unwrap_or(Value::Null);
        match f.pointer("/geometry/type").and_then(Value::as_str) {
            Some("Point") => {
                let c = f
                    .pointer("/geometry/coordinates")
                    .and_then(Value::as_array)
                    .filter(|c| c.len() >= 2)
                    .ok_or_else(|| bad(&locus, "bad point coordinates"))?;
                let (lon, lat) = (c[0].as_f64(), c[1].as_f64());
                let geo = GeoPoint::new(lon.unwrap_or(f64::NAN), lat.unwrap_or(f64::NAN))?;
                let mut map = props
                    .as_object()
                    .cloned()
                    .ok_or_else(|| bad(&locus, "missing properties"))?;
                let id = map.remove("id").and_then(|v| v.as_str().map(str::to_owned));
                let kind: Option<NodeKind> = map.remove("kind").and_then(|v| serde_json::from_value(v).ok());
                let (Some(id), Some(kind)) = (id, kind) else {
                    return Err(bad(&locus, "node feature needs id and kind"));
                };
                let attrs: NodeAttrs =
                    serde_json::from_value(Value::Object(map)).map_err(|e| bad(&locus, &e.to_string()))?;
                nodes.push(Node {
                    id: id.into(),
                    kind,
                    pos: projection.project(geo),
                    attrs,
                });
            }
            Some("LineString") => {
                let e: EdgeDoc = serde_json::from_value(props).map_err(|e| bad(&locus, &e.to_string()))?;
                edges.push(e.into_edge());
            }
            other => return Err(bad(&locus, &format!("unexpected geometry {other:?}"))),
        }
    }
    Ok(Model {
        graph: rebuild(nodes, edges)?,
        projection,
        provenance,
    })
}
