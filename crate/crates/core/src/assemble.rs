//! Turns a bare network plus building and plant registries into a connected
//! heating model.

use std::collections::{BTreeMap, HashMap};

use log::warn;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

use crate::demand::{complete_annual_demand, ProfileBank, SpecificDemand};
use crate::error::{Error, Result};
use crate::geo::{PlanePoint, Polygon, Projection};
use crate::ingest::{BlockRecord, BuildingRecord, CensusCell, PlantRecord};
use crate::netgraph::{NetworkGraph, Node, NodeId, NodeKind, PipeEdge, SegmentIndex};

/// Shortest service pipe, meters.
pub const MIN_SERVICE_LENGTH_M: f64 = 1.0;

/// Number of neighbors averaged when no census year is available.
pub const YEAR_NEIGHBORS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyConfig {
    /// Maximum centroid distance from the network for a building to be considered, m.
    pub buffer_threshold: f64,
    /// Maximum plant distance from the network, m.
    pub plant_attach_max: f64,
    pub seed: u64,
}

impl AssemblyConfig {
    pub fn new(seed: u64) -> Self {
        AssemblyConfig {
            buffer_threshold: 100.0,
            plant_attach_max: 200.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.buffer_threshold > 0.0 && self.plant_attach_max > 0.0) {
            return Err(Error::Config(
                "buffer_threshold and plant_attach_max must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A building record with its projected footprint centroid and area.
#[derive(Debug, Clone, PartialEq)]
pub struct SitedBuilding {
    pub record: BuildingRecord,
    pub centroid: PlanePoint,
    /// m²
    pub footprint_area: f64,
}

pub fn site_buildings(records: &[BuildingRecord], proj: &Projection) -> Result<Vec<SitedBuilding>> {
    records
        .iter()
        .map(|r| {
            let (centroid, footprint_area) = r.centroid(proj)?;
            Ok(SitedBuilding {
                record: r.clone(),
                centroid,
                footprint_area,
            })
        })
        .collect()
}

pub fn building_node_id(record_id: &str) -> NodeId {
    NodeId::new(format!("B:{record_id}"))
}

pub fn plant_node_id(record_id: &str) -> NodeId {
    NodeId::new(format!("P:{record_id}"))
}

/// Keeps buildings whose centroid lies within `threshold` meters of a network
/// edge, preserving input order.
pub fn filter_by_buffer(g: &NetworkGraph, buildings: &[SitedBuilding], threshold: f64) -> Result<Vec<SitedBuilding>> {
    if g.edge_count() == 0 {
        return Err(Error::Graph("cannot buffer an edgeless network".into()));
    }
    let index = SegmentIndex::of_graph(g, |e| !e.service);
    let mut kept = Vec::new();
    for b in buildings {
        let near = index.nearest(b.centroid).ok_or_else(no_main_edge)?;
        if near.distance <= threshold {
            kept.push(b.clone());
        }
    }
    Ok(kept)
}

/// `round(p * n)` with halves rounded up.
pub fn connection_count(p: f64, n: usize) -> usize {
    // the epsilon absorbs products such as 0.35 * 10 = 3.4999999999999996
    ((p * n as f64 + 0.5 + 1e-9).floor() as usize).min(n)
}

/// Deterministic generator for one block, independent of every other block.
fn block_rng(seed: u64, block_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(block_id.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Chooses `k` of `n` indices uniformly without replacement (partial Fisher–Yates).
pub fn choose_indices(seed: u64, block_id: &str, n: usize, k: usize) -> Vec<usize> {
    let mut rng = block_rng(seed, block_id);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k.min(n) {
        let j = i + below(&mut rng, n - i);
        idx.swap(i, j);
    }
    idx.truncate(k.min(n));
    idx
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockSelection {
    pub members: usize,
    pub selected: usize,
    pub proportion: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Sampling {
    /// Connected buildings in input order.
    pub connected: Vec<SitedBuilding>,
    pub blocks: BTreeMap<String, BlockSelection>,
    pub unblocked: usize,
}

/// Block of each building by centroid containment, falling back to the
/// record's own `block_id` when it names a known block.
fn block_membership(kept: &[SitedBuilding], blocks: &[BlockRecord], proj: &Projection) -> Result<Vec<Option<usize>>> {
    let polys: Vec<Vec<Polygon>> = blocks
        .iter()
        .map(|b| {
            b.polygon
                .iter()
                .map(|p| p.project(proj))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Geometry(format!("block {}: {e}", b.block_id)))
        })
        .collect::<Result<_>>()?;
    let by_id: HashMap<&str, usize> = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b.block_id.as_str(), i))
        .collect();
    Ok(kept
        .iter()
        .map(|b| {
            polys
                .iter()
                .position(|parts| parts.iter().any(|p| p.contains(b.centroid)))
                .or_else(|| b.record.block_id.as_deref().and_then(|id| by_id.get(id).copied()))
        })
        .collect())
}

/// Selects the connected buildings: `round-half-up(p * n)` per block with a
/// known proportion, everything else connected.
pub fn sample_connections(
    kept: &[SitedBuilding],
    blocks: &[BlockRecord],
    proj: &Projection,
    seed: u64,
) -> Result<Sampling> {
    let membership = block_membership(kept, blocks, proj)?;
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut connected = vec![false; kept.len()];
    let mut out = Sampling::default();
    for (i, m) in membership.iter().enumerate() {
        match m {
            Some(b) => members.entry(*b).or_default().push(i),
            None => {
                connected[i] = true;
                out.unblocked += 1;
            }
        }
    }
    for (bi, mut list) in members {
        let block = &blocks[bi];
        list.sort_by(|&a, &b| kept[a].record.id.cmp(&kept[b].record.id));
        let chosen: Vec<usize> = match block.connection_proportion {
            Some(p) => {
                let k = connection_count(p, list.len());
                choose_indices(seed, &block.block_id, list.len(), k)
                    .into_iter()
                    .map(|j| list[j])
                    .collect()
            }
            None => list.clone(),
        };
        for &i in &chosen {
            connected[i] = true;
        }
        out.blocks.insert(
            block.block_id.clone(),
            BlockSelection {
                members: list.len(),
                selected: chosen.len(),
                proportion: block.connection_proportion,
            },
        );
    }
    out.connected = kept
        .iter()
        .zip(connected)
        .filter(|(_, c)| *c)
        .map(|(b, _)| b.clone())
        .collect();
    Ok(out)
}

fn no_main_edge() -> Error {
    Error::Graph("no main pipe to connect to".into())
}

fn main_edges(g: &NetworkGraph) -> SegmentIndex {
    SegmentIndex::of_graph(g, |e| !e.service)
}

/// Attaches `node` to the nearest main edge with a perpendicular service pipe.
/// `index` must hold the main edges of `g` and is kept in step with the split.
fn attach_node(g: &mut NetworkGraph, index: &mut SegmentIndex, node: Node) -> Result<NodeId> {
    let near = index.nearest(node.pos).ok_or_else(no_main_edge)?;
    let pos = node.pos;
    let id = node.id.clone();
    let (u, v) = g
        .edge(near.edge)
        .map(|e| (e.u.clone(), e.v.clone()))
        .ok_or_else(no_main_edge)?;
    let junction = g.split_edge(near.edge, near.foot)?;
    if g.edge(near.edge).is_none() {
        index.remove(near.edge);
        for (a, b) in [(&u, &junction), (&junction, &v)] {
            let piece = g.edge_between(a, b).expect("split creates both halves");
            index.insert(piece, g.node(a).unwrap().pos, g.node(b).unwrap().pos);
        }
    }
    g.add_node(node)?;
    let len = g.node(&junction).unwrap().pos.dist(&pos).max(MIN_SERVICE_LENGTH_M);
    g.add_edge(PipeEdge::service(junction, id.clone(), len))?;
    Ok(id)
}

/// Adds a Building node at the footprint centroid, connected to the nearest
/// main pipe by a service edge.
pub fn attach_building(g: &mut NetworkGraph, b: &SitedBuilding) -> Result<NodeId> {
    let node = building_node(b);
    attach_node(g, &mut main_edges(g), node)
}

fn building_node(b: &SitedBuilding) -> Node {
    let r = &b.record;
    let mut node = Node::new(building_node_id(&r.id), NodeKind::Building, b.centroid);
    node.attrs.source_id = Some(r.id.clone());
    node.attrs.usage_type = Some(r.usage_type);
    node.attrs.floor_area = r.floor_area;
    node.attrs.annual_demand = r.annual_demand;
    node.attrs.construction_year = r.construction_year;
    node.attrs.block_id = r.block_id.clone();
    node
}

/// Attaches buildings in ascending id order.
pub fn attach_buildings(g: &mut NetworkGraph, buildings: &[SitedBuilding]) -> Result<Vec<NodeId>> {
    let mut order: Vec<&SitedBuilding> = buildings.iter().collect();
    order.sort_by(|a, b| a.record.id.cmp(&b.record.id));
    let mut index = main_edges(g);
    order
        .into_iter()
        .map(|b| attach_node(g, &mut index, building_node(b)))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct YearSummary {
    pub explicit: usize,
    pub census: usize,
    pub neighbors: usize,
}

/// Fills missing construction years from the census grid, then from the mean
/// of the nearest buildings that already have one.
pub fn assign_construction_years(buildings: &mut [SitedBuilding], cells: &[CensusCell]) -> Result<YearSummary> {
    let grid: HashMap<(i64, i64), i32> = cells
        .iter()
        .map(|c| ((c.grid_x, c.grid_y), c.construction_year))
        .collect();
    let mut summary = YearSummary::default();
    let mut missing = Vec::new();
    for (i, b) in buildings.iter_mut().enumerate() {
        if b.record.construction_year.is_some() {
            summary.explicit += 1;
        } else if let Some(&y) = grid.get(&CensusCell::index_of(b.centroid)) {
            b.record.construction_year = Some(y);
            summary.census += 1;
        } else {
            missing.push(i);
        }
    }
    if missing.is_empty() {
        return Ok(summary);
    }
    let known: Vec<(PlanePoint, &str, i32)> = buildings
        .iter()
        .filter_map(|b| {
            b.record
                .construction_year
                .map(|y| (b.centroid, b.record.id.as_str(), y))
        })
        .collect();
    if known.is_empty() {
        return Err(Error::Config("no construction year available for any building".into()));
    }
    let mut fills = Vec::with_capacity(missing.len());
    for &i in &missing {
        let c = buildings[i].centroid;
        let mut near: Vec<(f64, &str, i32)> = known.iter().map(|(p, id, y)| (p.dist2(&c), *id, *y)).collect();
        let k = YEAR_NEIGHBORS.min(near.len());
        let cmp = |a: &(f64, &str, i32), b: &(f64, &str, i32)| a.0.total_cmp(&b.0).then(a.1.cmp(b.1));
        if k < near.len() {
            near.select_nth_unstable_by(k - 1, cmp);
        }
        let sum: i64 = near[..k].iter().map(|n| n.2 as i64).sum();
        fills.push((i, mean_year(sum, k)));
    }
    for (i, y) in fills {
        buildings[i].record.construction_year = Some(y);
        summary.neighbors += 1;
    }
    Ok(summary)
}

/// Integer mean rounded half up.
pub fn mean_year(sum: i64, count: usize) -> i32 {
    let k = count as i64;
    (2 * sum + k).div_euclid(2 * k) as i32
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlantAttachment {
    pub attached: Vec<NodeId>,
    /// Plant id and its distance to the network, m.
    pub skipped: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

/// Connects plants within `max_dist` of the network as supply nodes.
pub fn attach_plants(
    g: &mut NetworkGraph,
    plants: &[PlantRecord],
    proj: &Projection,
    max_dist: f64,
) -> Result<PlantAttachment> {
    let mut out = PlantAttachment::default();
    if plants.is_empty() {
        let msg = "no heating plants given; the model has no supply node".to_string();
        warn!("{msg}");
        out.warnings.push(msg);
        return Ok(out);
    }
    let mut order: Vec<&PlantRecord> = plants.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let mut index = main_edges(g);
    for p in order {
        let pos = proj.project(p.pos);
        let near = index.nearest(pos).ok_or_else(no_main_edge)?;
        if near.distance > max_dist {
            out.skipped.push((p.id.clone(), near.distance));
            continue;
        }
        let mut node = Node::new(plant_node_id(&p.id), NodeKind::Plant, pos);
        node.attrs.source_id = Some(p.id.clone());
        node.attrs.name = Some(p.name.clone());
        node.attrs.capacity_kw = p.capacity_kw;
        node.attrs.plant_type = p.plant_type.clone();
        out.attached.push(attach_node(g, &mut index, node)?);
    }
    if out.attached.is_empty() {
        let msg = "no heating plant lies close enough to the network".to_string();
        warn!("{msg}");
        out.warnings.push(msg);
    }
    Ok(out)
}

/// Completes annual demand for every Building node and derives its nominal load.
pub fn assign_demand(
    g: &mut NetworkGraph,
    records: &[SitedBuilding],
    specific: &SpecificDemand,
    bank: &ProfileBank,
) -> Result<()> {
    for b in records {
        let id = building_node_id(&b.record.id);
        let Some(node) = g.node_mut(&id) else { continue };
        let annual = complete_annual_demand(&b.record, specific)?;
        let mix = BTreeMap::from([(b.record.usage_type, annual)]);
        node.attrs.annual_demand = Some(annual);
        node.attrs.nominal_load = Some(bank.peak(&mix));
        node.attrs.demand_by_usage = mix;
        node.attrs.construction_year = b.record.construction_year;
    }
    Ok(())
}
