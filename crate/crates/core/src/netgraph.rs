//! Geometric undirected graph of the heating network.
//!
//! Nodes are keyed by string ids and iterated in id order. Edges live in
//! insertion-ordered slots; removed edges leave a tombstone so that
//! [`EdgeId`]s stay stable and insertion order can serve as a tie-break.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{point_segment_distance, PlanePoint};
use crate::ingest::UsageType;

/// Distance below which a foot point is considered to coincide with an edge endpoint.
pub const SPLIT_SNAP_M: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Junction,
    Building,
    Plant,
    /// Aggregated cluster of buildings.
    Consumer,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Junction => "junction",
            NodeKind::Building => "building",
            NodeKind::Plant => "plant",
            NodeKind::Consumer => "consumer",
        }
    }

    pub fn is_demand(self) -> bool {
        matches!(self, NodeKind::Building | NodeKind::Consumer)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeAttrs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage_type: Option<UsageType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor_area: Option<f64>,
    /// kWh/a
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annual_demand: Option<f64>,
    /// kW
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_load: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member_count: Option<u32>,
    /// Annual demand split by usage type; lets a consumer's hourly profile be
    /// rebuilt as a sum of per-usage shapes.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub demand_by_usage: BTreeMap<UsageType, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_kw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant_type: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub pos: PlanePoint,
    pub attrs: NodeAttrs,
}

impl Node {
    pub fn new(id: impl Into<NodeId>, kind: NodeKind, pos: PlanePoint) -> Self {
        Node {
            id: id.into(),
            kind,
            pos,
            attrs: NodeAttrs::default(),
        }
    }

    pub fn junction(id: impl Into<NodeId>, pos: PlanePoint) -> Self {
        Node::new(id, NodeKind::Junction, pos)
    }

    fn validate(&self) -> Result<()> {
        if !(self.pos.x.is_finite() && self.pos.y.is_finite()) {
            return Err(Error::Graph(format!("node {} has a non-finite position", self.id)));
        }
        if let Some(d) = self.attrs.annual_demand {
            if !(d >= 0.0) {
                return Err(Error::Graph(format!("node {} has negative annual demand", self.id)));
            }
        }
        if let Some(y) = self.attrs.construction_year {
            if !(1500..=2100).contains(&y) {
                return Err(Error::Graph(format!(
                    "node {} construction year {y} out of range",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct PipeEdge {
    pub u: NodeId,
    pub v: NodeId,
    /// meters
    pub length: f64,
    /// Service pipe from a building, plant or consumer to the main network.
    pub service: bool,
    pub dn: Option<String>,
    /// meters
    pub inner_diameter: Option<f64>,
    /// kg/s
    pub nominal_flow: Option<f64>,
    pub insulation_class: Option<String>,
}

impl PipeEdge {
    pub fn new(u: impl Into<NodeId>, v: impl Into<NodeId>, length: f64) -> Self {
        PipeEdge {
            u: u.into(),
            v: v.into(),
            length,
            service: false,
            dn: None,
            inner_diameter: None,
            nominal_flow: None,
            insulation_class: None,
        }
    }

    pub fn service(u: impl Into<NodeId>, v: impl Into<NodeId>, length: f64) -> Self {
        PipeEdge {
            service: true,
            ..PipeEdge::new(u, v, length)
        }
    }

    pub fn other(&self, end: &NodeId) -> &NodeId {
        if &self.u == end {
            &self.v
        } else {
            &self.u
        }
    }

    /// Same pipe properties, ignoring endpoints and length.
    pub fn same_pipe(&self, other: &PipeEdge) -> bool {
        self.service == other.service
            && self.dn == other.dn
            && self.inner_diameter == other.inner_diameter
            && self.nominal_flow == other.nominal_flow
            && self.insulation_class == other.insulation_class
    }

    fn with_endpoints(&self, u: NodeId, v: NodeId, length: f64) -> PipeEdge {
        PipeEdge {
            u,
            v,
            length,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestEdge {
    pub edge: EdgeId,
    pub distance: f64,
    pub foot: PlanePoint,
}

/// Uniform grid over edge segments for nearest-edge queries.
///
/// Answers exactly like [`NetworkGraph::nearest_edge_where`] on the edges it
/// holds, including the earliest-inserted tie-break. The index does not track
/// the graph; callers insert and remove edges as they mutate it.
#[derive(Debug, Clone)]
pub struct SegmentIndex {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<EdgeId>>,
    segments: HashMap<EdgeId, (PlanePoint, PlanePoint)>,
    /// Inclusive range of cells that ever held a segment.
    lo: (i64, i64),
    hi: (i64, i64),
}

impl SegmentIndex {
    /// Empty index with square cells of `cell` meters.
    pub fn new(cell: f64) -> Result<Self> {
        if !(cell > 0.0 && cell.is_finite()) {
            return Err(Error::Geometry(format!("invalid index cell size {cell}")));
        }
        Ok(Self {
            cell,
            cells: HashMap::new(),
            segments: HashMap::new(),
            lo: (i64::MAX, i64::MAX),
            hi: (i64::MIN, i64::MIN),
        })
    }

    /// Index over the edges of `g` accepted by `filter`, with the cell size
    /// set to their mean length.
    pub fn of_graph(g: &NetworkGraph, filter: impl Fn(&PipeEdge) -> bool) -> Self {
        let chosen: Vec<(EdgeId, &PipeEdge)> = g.edges().filter(|(_, e)| filter(e)).collect();
        let mean = chosen
            .iter()
            .map(|(_, e)| g.segment(e))
            .map(|(a, b)| a.dist(&b))
            .sum::<f64>()
            / chosen.len().max(1) as f64;
        let mut index = Self::new(if mean > 1.0 { mean } else { 1.0 }).expect("positive cell size");
        for (id, e) in chosen {
            let (a, b) = g.segment(e);
            index.insert(id, a, b);
        }
        index
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    fn cell_of(&self, p: PlanePoint) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn covered(&self, a: PlanePoint, b: PlanePoint) -> impl Iterator<Item = (i64, i64)> {
        let (ca, cb) = (self.cell_of(a), self.cell_of(b));
        let (x0, x1) = (ca.0.min(cb.0), ca.0.max(cb.0));
        let (y0, y1) = (ca.1.min(cb.1), ca.1.max(cb.1));
        (x0..=x1).flat_map(move |x| (y0..=y1).map(move |y| (x, y)))
    }

    /// Adds a segment. Segments of zero length are ignored, as in a linear scan.
    pub fn insert(&mut self, id: EdgeId, a: PlanePoint, b: PlanePoint) {
        if a == b {
            return;
        }
        self.remove(id);
        let cells: Vec<(i64, i64)> = self.covered(a, b).collect();
        for c in cells {
            self.lo = (self.lo.0.min(c.0), self.lo.1.min(c.1));
            self.hi = (self.hi.0.max(c.0), self.hi.1.max(c.1));
            self.cells.entry(c).or_default().push(id);
        }
        self.segments.insert(id, (a, b));
    }

    pub fn remove(&mut self, id: EdgeId) {
        let Some((a, b)) = self.segments.remove(&id) else {
            return;
        };
        let cells: Vec<(i64, i64)> = self.covered(a, b).collect();
        for c in cells {
            if let Some(list) = self.cells.get_mut(&c) {
                list.retain(|e| *e != id);
            }
        }
    }

    /// Nearest segment to `p`; the smallest edge id wins ties.
    pub fn nearest(&self, p: PlanePoint) -> Option<NearestEdge> {
        if self.segments.is_empty() {
            return None;
        }
        let (cx, cy) = self.cell_of(p);
        let mut best: Option<NearestEdge> = None;
        let consider = |id: EdgeId, best: &mut Option<NearestEdge>| {
            let (a, b) = self.segments[&id];
            if let Ok((distance, foot)) = point_segment_distance(p, a, b) {
                if best.is_none_or(|b| distance < b.distance || (distance == b.distance && id < b.edge)) {
                    *best = Some(NearestEdge {
                        edge: id,
                        distance,
                        foot,
                    });
                }
            }
        };
        let reach = [cx - self.lo.0, self.hi.0 - cx, cy - self.lo.1, self.hi.1 - cy]
            .into_iter()
            .max()
            .unwrap_or(0)
            .max(0);
        // Far from the occupied cells a ring search visits mostly empty cells.
        if (2 * reach + 1).saturating_mul(2 * reach + 1) > 4 * self.cells.len() as i64 + 64 {
            for &id in self.segments.keys() {
                consider(id, &mut best);
            }
            return best;
        }
        for r in 0..=reach {
            for x in cx - r..=cx + r {
                let edge_col = x == cx - r || x == cx + r;
                let mut y = cy - r;
                while y <= cy + r {
                    if let Some(list) = self.cells.get(&(x, y)) {
                        for &id in list {
                            consider(id, &mut best);
                        }
                    }
                    y += if edge_col || r == 0 { 1 } else { 2 * r };
                }
            }
            // Anything outside rings 0..=r is more than r cells away.
            if best.is_some_and(|b| b.distance < r as f64 * self.cell) {
                break;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Default)]
pub struct NetworkGraph {
    nodes: BTreeMap<NodeId, Node>,
    edges: Vec<Option<PipeEdge>>,
    adjacency: BTreeMap<NodeId, BTreeMap<NodeId, EdgeId>>,
    live_edges: usize,
    serial: u64,
}

impl NetworkGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.live_edges
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains_node(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn node_mut(&mut self, id: &NodeId) -> Option<&mut Node> {
        self.nodes.get_mut(id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &Node> {
        self.nodes.values().filter(move |n| n.kind == kind)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&PipeEdge> {
        self.edges.get(id.0).and_then(Option::as_ref)
    }

    pub fn edge_mut(&mut self, id: EdgeId) -> Option<&mut PipeEdge> {
        self.edges.get_mut(id.0).and_then(Option::as_mut)
    }

    /// Live edges in insertion order.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &PipeEdge)> {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().map(|e| (EdgeId(i), e)))
    }

    pub fn edge_ids(&self) -> Vec<EdgeId> {
        self.edges().map(|(id, _)| id).collect()
    }

    pub fn edge_between(&self, a: &NodeId, b: &NodeId) -> Option<EdgeId> {
        self.adjacency.get(a).and_then(|m| m.get(b)).copied()
    }

    /// Neighbors of `id` in ascending id order with the connecting edge.
    pub fn neighbors<'a>(&'a self, id: &NodeId) -> impl Iterator<Item = (&'a NodeId, EdgeId)> + 'a {
        self.adjacency
            .get(id)
            .into_iter()
            .flat_map(|m| m.iter().map(|(n, e)| (n, *e)))
    }

    pub fn degree(&self, id: &NodeId) -> usize {
        self.adjacency.get(id).map_or(0, BTreeMap::len)
    }

    pub fn total_length(&self) -> f64 {
        self.edges().map(|(_, e)| e.length).sum()
    }

    /// An id with the given prefix that is not yet used in the graph.
    pub fn fresh_id(&mut self, prefix: &str) -> NodeId {
        loop {
            self.serial += 1;
            let id = NodeId(format!("{prefix}{:06}", self.serial));
            if !self.nodes.contains_key(&id) {
                return id;
            }
        }
    }

    pub fn add_node(&mut self, node: Node) -> Result<()> {
        node.validate()?;
        if self.nodes.contains_key(&node.id) {
            return Err(Error::Graph(format!("duplicate node id {}", node.id)));
        }
        self.adjacency.insert(node.id.clone(), BTreeMap::new());
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    pub fn add_edge(&mut self, edge: PipeEdge) -> Result<EdgeId> {
        if edge.u == edge.v {
            return Err(Error::Graph(format!("self-loop at {}", edge.u)));
        }
        for end in [&edge.u, &edge.v] {
            if !self.nodes.contains_key(end) {
                return Err(Error::Graph(format!("edge endpoint {end} does not exist")));
            }
        }
        if !(edge.length > 0.0 && edge.length.is_finite()) {
            return Err(Error::Graph(format!(
                "edge {}-{} has non-positive length",
                edge.u, edge.v
            )));
        }
        if edge.inner_diameter.is_some_and(|d| !(d > 0.0)) {
            return Err(Error::Graph(format!(
                "edge {}-{} has non-positive diameter",
                edge.u, edge.v
            )));
        }
        if edge.nominal_flow.is_some_and(|f| !(f >= 0.0)) {
            return Err(Error::Graph(format!("edge {}-{} has negative flow", edge.u, edge.v)));
        }
        if self.edge_between(&edge.u, &edge.v).is_some() {
            return Err(Error::Graph(format!("parallel edge {}-{}", edge.u, edge.v)));
        }
        let id = EdgeId(self.edges.len());
        self.adjacency.get_mut(&edge.u).unwrap().insert(edge.v.clone(), id);
        self.adjacency.get_mut(&edge.v).unwrap().insert(edge.u.clone(), id);
        self.edges.push(Some(edge));
        self.live_edges += 1;
        Ok(id)
    }

    pub fn remove_edge(&mut self, id: EdgeId) -> Result<PipeEdge> {
        let edge = self
            .edges
            .get_mut(id.0)
            .and_then(Option::take)
            .ok_or_else(|| Error::Graph(format!("edge {} does not exist", id.0)))?;
        self.adjacency.get_mut(&edge.u).unwrap().remove(&edge.v);
        self.adjacency.get_mut(&edge.v).unwrap().remove(&edge.u);
        self.live_edges -= 1;
        Ok(edge)
    }

    /// Removes a node together with all incident edges.
    pub fn remove_node(&mut self, id: &NodeId) -> Result<Node> {
        let incident: Vec<EdgeId> = self
            .adjacency
            .get(id)
            .ok_or_else(|| Error::Graph(format!("node {id} does not exist")))?
            .values()
            .copied()
            .collect();
        for e in incident {
            self.remove_edge(e)?;
        }
        self.adjacency.remove(id);
        Ok(self.nodes.remove(id).unwrap())
    }

    /// Undirected connected components; each part sorted, parts ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<NodeId>> {
        let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
        let mut parts = Vec::new();
        for start in self.nodes.keys() {
            if !seen.insert(start) {
                continue;
            }
            let mut part = vec![start.clone()];
            let mut stack = vec![start];
            while let Some(n) = stack.pop() {
                for (m, _) in self.neighbors(n) {
                    if seen.insert(m) {
                        part.push(m.clone());
                        stack.push(m);
                    }
                }
            }
            part.sort();
            parts.push(part);
        }
        parts
    }

    /// Single-source shortest path lengths over edge length.
    pub fn distances_from(&self, src: &NodeId) -> Result<HashMap<NodeId, f64>> {
        if !self.contains_node(src) {
            return Err(Error::Graph(format!("node {src} does not exist")));
        }
        let mut dist: HashMap<NodeId, f64> = HashMap::new();
        let mut heap = BinaryHeap::new();
        dist.insert(src.clone(), 0.0);
        heap.push(HeapEntry {
            dist: 0.0,
            node: src.clone(),
        });
        while let Some(HeapEntry { dist: d, node }) = heap.pop() {
            if d > dist[&node] {
                continue;
            }
            for (m, e) in self.neighbors(&node) {
                let nd = d + self.edges[e.0].as_ref().unwrap().length;
                if dist.get(m).is_none_or(|&old| nd < old) {
                    dist.insert(m.clone(), nd);
                    heap.push(HeapEntry {
                        dist: nd,
                        node: m.clone(),
                    });
                }
            }
        }
        Ok(dist)
    }

    /// Walks from `from` down the distance field `dist` (distances to some
    /// target) choosing, among tight neighbors, the smallest id at each step.
    pub fn descend(&self, from: &NodeId, dist: &HashMap<NodeId, f64>) -> Option<Vec<NodeId>> {
        let mut cur = from.clone();
        let mut d_cur = *dist.get(&cur)?;
        let mut path = vec![cur.clone()];
        while d_cur > 0.0 {
            let tol = 1e-9 * d_cur.max(1.0);
            let mut next: Option<(&NodeId, f64)> = None;
            let mut fallback: Option<(&NodeId, f64, f64)> = None;
            for (m, e) in self.neighbors(&cur) {
                let Some(&dm) = dist.get(m) else { continue };
                if dm >= d_cur {
                    continue;
                }
                let via = dm + self.edges[e.0].as_ref().unwrap().length;
                if (via - d_cur).abs() <= tol {
                    // neighbors iterate in id order, so the first tight one is the smallest
                    next = Some((m, dm));
                    break;
                }
                if fallback.is_none_or(|(_, best, _)| via < best) {
                    fallback = Some((m, via, dm));
                }
            }
            let (m, dm) = match (next, fallback) {
                (Some(n), _) => n,
                (None, Some((m, _, dm))) => (m, dm),
                (None, None) => return None,
            };
            cur = m.clone();
            d_cur = dm;
            path.push(cur.clone());
        }
        Some(path)
    }

    /// Minimal-length path from `src` to `dst`; ties broken toward the
    /// smallest next-node id. `Ok(None)` when `dst` is unreachable.
    pub fn shortest_path(&self, src: &NodeId, dst: &NodeId) -> Result<Option<(Vec<NodeId>, f64)>> {
        if !self.contains_node(src) {
            return Err(Error::Graph(format!("node {src} does not exist")));
        }
        let dist = self.distances_from(dst)?;
        let Some(&total) = dist.get(src) else {
            return Ok(None);
        };
        Ok(self.descend(src, &dist).map(|p| (p, total)))
    }

    fn segment(&self, e: &PipeEdge) -> (PlanePoint, PlanePoint) {
        (self.nodes[&e.u].pos, self.nodes[&e.v].pos)
    }

    pub fn nearest_edge(&self, p: PlanePoint) -> Result<NearestEdge> {
        self.nearest_edge_where(p, |_| true)
    }

    /// Nearest edge among those accepted by `filter`; earliest inserted wins ties.
    /// Edges whose endpoints coincide are skipped.
    pub fn nearest_edge_where(&self, p: PlanePoint, filter: impl Fn(&PipeEdge) -> bool) -> Result<NearestEdge> {
        let mut best: Option<NearestEdge> = None;
        for (id, e) in self.edges() {
            if !filter(e) {
                continue;
            }
            let (a, b) = self.segment(e);
            let Ok((distance, foot)) = point_segment_distance(p, a, b) else {
                continue;
            };
            if best.is_none_or(|b| distance < b.distance) {
                best = Some(NearestEdge {
                    edge: id,
                    distance,
                    foot,
                });
            }
        }
        best.ok_or_else(|| Error::Graph("no candidate edge in graph".into()))
    }

    /// Splits `edge` at `foot`, inserting a junction. Returns the endpoint id
    /// instead when `foot` coincides with an endpoint.
    pub fn split_edge(&mut self, edge: EdgeId, foot: PlanePoint) -> Result<NodeId> {
        let e = self
            .edge(edge)
            .ok_or_else(|| Error::Graph(format!("edge {} does not exist", edge.0)))?
            .clone();
        let (a, b) = self.segment(&e);
        let (off, _) = point_segment_distance(foot, a, b)?;
        if off > SPLIT_SNAP_M {
            return Err(Error::Graph(format!("split point is {off} m off edge {}-{}", e.u, e.v)));
        }
        if foot.dist(&a) <= SPLIT_SNAP_M {
            return Ok(e.u);
        }
        if foot.dist(&b) <= SPLIT_SNAP_M {
            return Ok(e.v);
        }
        let t = (foot.dist(&a) / a.dist(&b)).clamp(0.0, 1.0);
        let first = e.length * t;
        let second = e.length - first;
        let j = self.fresh_id("J");
        self.remove_edge(edge)?;
        self.add_node(Node::junction(j.clone(), foot))?;
        self.add_edge(e.with_endpoints(e.u.clone(), j.clone(), first))?;
        self.add_edge(e.with_endpoints(j.clone(), e.v.clone(), second))?;
        Ok(j)
    }

    pub(crate) fn serial(&self) -> u64 {
        self.serial
    }

    pub(crate) fn set_serial(&mut self, serial: u64) {
        self.serial = serial;
    }
}

#[derive(Debug)]
struct HeapEntry {
    dist: f64,
    node: NodeId,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // min-heap on (dist, node)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(x: f64, y: f64) -> PlanePoint {
        PlanePoint::new(x, y)
    }

    #[test]
    fn segment_index_matches_scan() {
        let g = graph_with(
            &[
                ("a", 0.0, 0.0),
                ("b", 100.0, 0.0),
                ("c", 100.0, 100.0),
                ("d", 0.0, 100.0),
                ("e", 350.0, 40.0),
            ],
            &[
                ("a", "b", 100.0),
                ("b", "c", 100.0),
                ("c", "d", 100.0),
                ("d", "a", 100.0),
                ("b", "e", 250.0),
            ],
        );
        let index = SegmentIndex::of_graph(&g, |_| true);
        assert_eq!(index.len(), 5);
        for i in -20..60 {
            for j in -20..40 {
                let p = pp(i as f64 * 7.3, j as f64 * 5.1);
                assert_eq!(index.nearest(p), Some(g.nearest_edge(p).unwrap()), "at {p:?}");
            }
        }
        let far = pp(1e7, -1e7);
        assert_eq!(index.nearest(far), Some(g.nearest_edge(far).unwrap()));
        // the square's centre is equidistant from all four sides
        assert_eq!(index.nearest(pp(50.0, 50.0)).unwrap().edge, EdgeId(0));
    }

    #[test]
    fn segment_index_updates() {
        let mut index = SegmentIndex::new(10.0).unwrap();
        assert!(index.nearest(pp(0.0, 0.0)).is_none());
        index.insert(EdgeId(3), pp(0.0, 0.0), pp(100.0, 0.0));
        index.insert(EdgeId(4), pp(0.0, 50.0), pp(100.0, 50.0));
        index.insert(EdgeId(5), pp(1.0, 1.0), pp(1.0, 1.0));
        assert_eq!(index.len(), 2);
        assert_eq!(index.nearest(pp(10.0, 20.0)).unwrap().edge, EdgeId(3));
        index.remove(EdgeId(3));
        assert_eq!(index.nearest(pp(10.0, 20.0)).unwrap().edge, EdgeId(4));
        assert!(SegmentIndex::new(0.0).is_err());
    }

    fn graph_with(nodes: &[(&str, f64, f64)], edges: &[(&str, &str, f64)]) -> NetworkGraph {
        let mut g = NetworkGraph::new();
        for &(id, x, y) in nodes {
            g.add_node(Node::junction(id, pp(x, y))).unwrap();
        }
        for &(u, v, l) in edges {
            g.add_edge(PipeEdge::new(u, v, l)).unwrap();
        }
        g
    }

    #[test]
    fn add_and_remove() {
        let mut g = graph_with(
            &[("a", 0.0, 0.0), ("b", 1.0, 0.0), ("c", 0.0, 1.0), ("d", 1.0, 1.0)],
            &[("a", "b", 1.0), ("a", "c", 1.0)],
        );
        g.add_edge(PipeEdge::new("a", "d", 10.0)).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert!(g.add_edge(PipeEdge::new("a", "a", 1.0)).is_err());
        assert!(g.add_edge(PipeEdge::new("b", "a", 1.0)).is_err(), "parallel");
        assert!(g.add_edge(PipeEdge::new("a", "zz", 1.0)).is_err(), "dangling");
        assert!(g.add_node(Node::junction("a", pp(0.0, 0.0))).is_err(), "duplicate");

        g.remove_node(&"a".into()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.degree(&"b".into()), 0);
    }

    #[test]
    fn rejects_bad_attributes() {
        let mut g = NetworkGraph::new();
        let mut n = Node::new("b", NodeKind::Building, pp(0.0, 0.0));
        n.attrs.construction_year = Some(1400);
        assert!(g.add_node(n.clone()).is_err());
        n.attrs.construction_year = Some(1950);
        n.attrs.annual_demand = Some(-1.0);
        assert!(g.add_node(n).is_err());
    }

    #[test]
    fn components() {
        assert!(NetworkGraph::new().connected_components().is_empty());
        let g = graph_with(
            &[
                ("a", 0.0, 0.0),
                ("b", 1.0, 0.0),
                ("c", 2.0, 0.0),
                ("d", 0.0, 5.0),
                ("e", 1.0, 5.0),
                ("f", 2.0, 5.0),
            ],
            &[("a", "b", 1.0), ("b", "c", 1.0), ("d", "e", 1.0), ("e", "f", 1.0)],
        );
        let parts = g.connected_components();
        assert_eq!(parts.len(), 2);
        assert!(parts.iter().all(|p| p.len() == 3));

        let k4 = graph_with(
            &[("a", 0.0, 0.0), ("b", 1.0, 0.0), ("c", 0.0, 1.0), ("d", 1.0, 1.0)],
            &[
                ("a", "b", 1.0),
                ("a", "c", 1.0),
                ("a", "d", 1.4),
                ("b", "c", 1.4),
                ("b", "d", 1.0),
                ("c", "d", 1.0),
            ],
        );
        assert_eq!(
            k4.connected_components(),
            vec![vec!["a".into(), "b".into(), "c".into(), "d".into()]]
        );
    }

    #[test]
    fn shortest_paths() {
        let g = graph_with(
            &[("A", 0.0, 0.0), ("B", 1.0, 0.0), ("C", 2.0, 0.0)],
            &[("A", "B", 1.0), ("B", "C", 1.0), ("A", "C", 3.0)],
        );
        let (p, l) = g.shortest_path(&"A".into(), &"A".into()).unwrap().unwrap();
        assert_eq!((p, l), (vec!["A".into()], 0.0));
        let (p, l) = g.shortest_path(&"A".into(), &"C".into()).unwrap().unwrap();
        assert_eq!(p, vec![NodeId::from("A"), "B".into(), "C".into()]);
        assert_eq!(l, 2.0);

        // diamond with equal routes through m1 and m2
        let g = graph_with(
            &[("s", 0.0, 0.0), ("m2", 1.0, 1.0), ("m1", 1.0, -1.0), ("t", 2.0, 0.0)],
            &[("s", "m2", 1.0), ("m2", "t", 1.0), ("s", "m1", 1.0), ("m1", "t", 1.0)],
        );
        let (p, _) = g.shortest_path(&"s".into(), &"t".into()).unwrap().unwrap();
        assert_eq!(p[1], NodeId::from("m1"));

        let mut g = g;
        g.add_node(Node::junction("iso", pp(9.0, 9.0))).unwrap();
        assert!(g.shortest_path(&"s".into(), &"iso".into()).unwrap().is_none());
        assert!(g.shortest_path(&"s".into(), &"missing".into()).is_err());
    }

    #[test]
    fn nearest_edge_and_ties() {
        let g = graph_with(&[("a", -10.0, 0.0), ("b", 10.0, 0.0)], &[("a", "b", 20.0)]);
        let ne = g.nearest_edge(pp(0.0, 5.0)).unwrap();
        assert_eq!(ne.distance, 5.0);

        let g = graph_with(
            &[
                ("a", -10.0, 0.0),
                ("b", 10.0, 0.0),
                ("c", -10.0, 10.0),
                ("d", 10.0, 10.0),
            ],
            &[("c", "d", 20.0), ("a", "b", 20.0)],
        );
        let ne = g.nearest_edge(pp(0.0, 5.0)).unwrap();
        assert_eq!(ne.edge, EdgeId(0));
        assert!(NetworkGraph::new().nearest_edge(pp(0.0, 0.0)).is_err());
    }

    #[test]
    fn split_cases() {
        let mut g = graph_with(&[("a", 0.0, 0.0), ("b", 10.0, 0.0)], &[("a", "b", 10.0)]);
        let e = g.edge_ids()[0];
        g.edge_mut(e).unwrap().dn = Some("DN50".into());
        let j = g.split_edge(e, pp(3.0, 0.0)).unwrap();
        assert_eq!(g.edge_count(), 2);
        let l1 = g.edge(g.edge_between(&"a".into(), &j).unwrap()).unwrap();
        let l2 = g.edge(g.edge_between(&j, &"b".into()).unwrap()).unwrap();
        assert!((l1.length - 3.0).abs() < 1e-12 && (l2.length - 7.0).abs() < 1e-12);
        assert_eq!(l1.dn.as_deref(), Some("DN50"));
        assert_eq!(l2.dn.as_deref(), Some("DN50"));

        let e = g.edge_between(&"a".into(), &j).unwrap();
        assert_eq!(g.split_edge(e, pp(0.0, 0.0)).unwrap(), NodeId::from("a"));
        assert_eq!(g.edge_count(), 2);
        assert!(g.split_edge(e, pp(1.0, 1.0)).is_err());
    }

    #[test]
    fn split_midpoint() {
        let mut g = graph_with(&[("a", 0.0, 0.0), ("b", 10.0, 0.0)], &[("a", "b", 10.0)]);
        let e = g.edge_ids()[0];
        g.split_edge(e, pp(5.0, 0.0)).unwrap();
        let lens: Vec<f64> = g.edges().map(|(_, e)| e.length).collect();
        assert_eq!(lens, vec![5.0, 5.0]);
    }
}
