//! Readers for the vector inputs: KML networks, GeoJSON buildings, blocks and
//! plants, and the CSV registries.

mod geojson;
mod kml;
mod tables;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{multi_centroid_area, GeoPoint, GeoPolygon, PlanePoint, Polygon, Polyline, Projection};
use crate::netgraph::{NetworkGraph, Node, NodeId, PipeEdge};

pub use self::geojson::{
    blocks_to_geojson, buildings_to_geojson, load_blocks, load_buildings, load_plants, plants_to_geojson,
    polylines_to_geojson,
};
pub use self::kml::{parse_kml, polylines_to_kml};
pub use self::tables::{
    default_year_classes, load_catalog, load_census, load_control_points, load_weather, YearClasses,
};

/// Default vertex snapping distance for network ingest, meters.
pub const DEFAULT_SNAP_TOL_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UsageType {
    Residential,
    Office,
    Commercial,
    Industrial,
    Other,
}

impl UsageType {
    pub const ALL: [UsageType; 5] = [
        UsageType::Residential,
        UsageType::Office,
        UsageType::Commercial,
        UsageType::Industrial,
        UsageType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UsageType::Residential => "residential",
            UsageType::Office => "office",
            UsageType::Commercial => "commercial",
            UsageType::Industrial => "industrial",
            UsageType::Other => "other",
        }
    }
}

impl fmt::Display for UsageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UsageType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let t = s.trim().to_ascii_lowercase();
        UsageType::ALL
            .into_iter()
            .find(|u| u.as_str() == t)
            .ok_or_else(|| format!("unknown usage type {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingRecord {
    pub id: String,
    /// One entry per polygon part (more than one for MultiPolygon footprints).
    pub footprint: Vec<GeoPolygon>,
    pub usage_type: UsageType,
    /// m²
    pub floor_area: Option<f64>,
    /// kWh/a
    pub annual_demand: Option<f64>,
    pub block_id: Option<String>,
    pub construction_year: Option<i32>,
}

impl BuildingRecord {
    pub fn plane_footprint(&self, proj: &Projection) -> Result<Vec<Polygon>> {
        self.footprint.iter().map(|p| p.project(proj)).collect()
    }

    /// Footprint centroid on the projected plane and footprint area in m².
    pub fn centroid(&self, proj: &Projection) -> Result<(PlanePoint, f64)> {
        multi_centroid_area(&self.plane_footprint(proj)?)
            .map_err(|e| Error::Geometry(format!("building {}: {e}", self.id)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    pub block_id: String,
    pub polygon: Vec<GeoPolygon>,
    pub connection_proportion: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusCell {
    pub grid_x: i64,
    pub grid_y: i64,
    pub construction_year: i32,
}

/// Census grid cell size, meters.
pub const CENSUS_CELL_M: f64 = 100.0;

impl CensusCell {
    pub fn index_of(p: PlanePoint) -> (i64, i64) {
        (
            (p.x / CENSUS_CELL_M).floor() as i64,
            (p.y / CENSUS_CELL_M).floor() as i64,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantRecord {
    pub id: String,
    pub pos: GeoPoint,
    pub name: String,
    pub capacity_kw: Option<f64>,
    pub plant_type: Option<String>,
}

/// Converts projected polylines into a junction graph. Vertices within
/// `snap_tol` meters of an existing node merge into it; repeated edges are
/// kept once.
pub fn polylines_to_graph(polylines: &[Polyline], snap_tol: f64) -> NetworkGraph {
    let mut g = NetworkGraph::new();
    let cell = if snap_tol > 0.0 { snap_tol } else { 1.0 };
    let mut grid: HashMap<(i64, i64), Vec<(NodeId, PlanePoint)>> = HashMap::new();
    let key = |p: PlanePoint| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);

    for line in polylines {
        let mut prev: Option<(NodeId, PlanePoint)> = None;
        for &p in line.points() {
            let (cx, cy) = key(p);
            let mut best: Option<(f64, &(NodeId, PlanePoint))> = None;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for cand in grid.get(&(cx + dx, cy + dy)).into_iter().flatten() {
                        let d = cand.1.dist(&p);
                        if d <= snap_tol && best.is_none_or(|(bd, b)| d < bd || (d == bd && cand.0 < b.0)) {
                            best = Some((d, cand));
                        }
                    }
                }
            }
            let here = match best {
                Some((_, hit)) => hit.clone(),
                None => {
                    let id = g.fresh_id("J");
                    g.add_node(Node::junction(id.clone(), p)).expect("fresh id");
                    grid.entry((cx, cy)).or_default().push((id.clone(), p));
                    (id, p)
                }
            };
            if let Some((pid, ppos)) = &prev {
                if *pid != here.0 && g.edge_between(pid, &here.0).is_none() {
                    let len = ppos.dist(&here.1);
                    g.add_edge(PipeEdge::new(pid.clone(), here.0.clone(), len))
                        .expect("distinct nodes have distinct positions");
                }
            }
            prev = Some(here);
        }
    }
    g
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
