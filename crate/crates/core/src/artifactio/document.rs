use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::round_deg;
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, Projection};
use crate::model::{Model, Provenance};
use crate::netgraph::{NetworkGraph, Node, NodeAttrs, NodeId, NodeKind, PipeEdge};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    schema_version: String,
    projection_origin: GeoPoint,
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
    provenance: Provenance,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: NodeId,
    kind: NodeKind,
    lon: f64,
    lat: f64,
    #[serde(default)]
    attrs: NodeAttrs,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct EdgeDoc {
    pub u: NodeId,
    pub v: NodeId,
    pub length_m: f64,
    #[serde(default)]
    pub service: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dn: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_diameter_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_flow_kg_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insulation_class: Option<String>,
}

impl EdgeDoc {
    pub(crate) fn from_edge(e: &PipeEdge) -> Self {
        EdgeDoc {
            u: e.u.clone(),
            v: e.v.clone(),
            length_m: e.length,
            service: e.service,
            dn: e.dn.clone(),
            inner_diameter_m: e.inner_diameter,
            nominal_flow_kg_s: e.nominal_flow,
            insulation_class: e.insulation_class.clone(),
        }
    }

    pub(crate) fn into_edge(self) -> PipeEdge {
        PipeEdge {
            u: self.u,
            v: self.v,
            length: self.length_m,
            service: self.service,
            dn: self.dn,
            inner_diameter: self.inner_diameter_m,
            nominal_flow: self.nominal_flow_kg_s,
            insulation_class: self.insulation_class,
        }
    }
}

pub(crate) fn geo_of(proj: &Projection, node: &Node) -> GeoPoint {
    let g = proj.unproject(node.pos);
    GeoPoint {
        lon: round_deg(g.lon),
        lat: round_deg(g.lat),
    }
}

/// Rebuilds a graph from nodes and edges, restoring the id counter.
pub(crate) fn rebuild(
    nodes: impl IntoIterator<Item = Node>,
    edges: impl IntoIterator<Item = PipeEdge>,
) -> Result<NetworkGraph> {
    let mut g = NetworkGraph::new();
    let mut serial = 0u64;
    for n in nodes {
        let digits: String = n.id.as_str().chars().rev().take_while(char::is_ascii_digit).collect();
        if let Ok(v) = digits.chars().rev().collect::<String>().parse::<u64>() {
            serial = serial.max(v);
        }
        g.add_node(n)?;
    }
    for e in edges {
        g.add_edge(e)?;
    }
    g.set_serial(serial.max(g.serial()));
    Ok(g)
}

/// Serializes the model as a graph document (pretty JSON, edges in insertion order).
pub fn export_graph_json(model: &Model) -> String {
    let proj = &model.projection;
    let doc = GraphDocument {
        schema_version: SCHEMA_VERSION.into(),
        projection_origin: proj.origin,
        nodes: model
            .graph
            .nodes()
            .map(|n| {
                let geo = geo_of(proj, n);
                NodeDoc {
                    id: n.id.clone(),
                    kind: n.kind,
                    lon: geo.lon,
                    lat: geo.lat,
                    attrs: n.attrs.clone(),
                }
            })
            .collect(),
        edges: model.graph.edges().map(|(_, e)| EdgeDoc::from_edge(e)).collect(),
        provenance: model.provenance.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

pub fn import_graph_json(text: &str) -> Result<Model> {
    let raw: Value = serde_json::from_str(text)?;
    match raw.get("schema_version").and_then(Value::as_str) {
        Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(Error::Config(format!("unsupported graph schema version {v:?}"))),
        None => return Err(Error::Config("graph document has no schema_version".into())),
    }
    let doc: GraphDocument = serde_json::from_value(raw)?;
    let projection = Projection::new(doc.projection_origin)?;
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| {
            let geo = GeoPoint::new(n.lon, n.lat)?;
            Ok(Node {
                id: n.id,
                kind: n.kind,
                pos: projection.project(geo),
                attrs: n.attrs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let graph = rebuild(nodes, doc.edges.into_iter().map(EdgeDoc::into_edge))?;
    Ok(Model {
        graph,
        projection,
        provenance: doc.provenance,
    })
}

/// Structural equality: same nodes (kind, attributes, position within
/// `pos_tol` meters) and the same set of edges with identical attributes.
pub fn same_graph(a: &NetworkGraph, b: &NetworkGraph, pos_tol: f64) -> bool {
    if a.node_count() != b.node_count() || a.edge_count() != b.edge_count() {
        return false;
    }
    let nodes_match = a
        .nodes()
        .zip(b.nodes())
        .all(|(x, y)| x.id == y.id && x.kind == y.kind && x.attrs == y.attrs && x.pos.dist(&y.pos) <= pos_tol);
    nodes_match
        && a.edges().all(|(_, e)| {
            b.edge_between(&e.u, &e.v)
                .and_then(|id| b.edge(id))
                .is_some_and(|f| f.length == e.length && f.same_pipe(e))
        })
}
