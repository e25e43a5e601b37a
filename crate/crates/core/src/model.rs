use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geo::Projection;
use crate::netgraph::NetworkGraph;

/// Modeling choices recorded in every export.
pub const MODELING_NOTES: [&str; 3] = [
    "single-line network: one edge per pipe route, supply and return not separated",
    "buildings and plants attached by perpendicular service pipes to the nearest main",
    "flows routed along shortest paths to the nearest plant; approximate for meshed networks",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPlant {
    pub id: String,
    pub distance_m: f64,
}

/// Pipeline events that the report needs and that must survive export.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunNotes {
    pub stages: Vec<String>,
    pub skipped_plants: Vec<SkippedPlant>,
    /// Edges exceeding the largest catalog pipe.
    pub flagged_edges: Vec<[String; 2]>,
    pub warnings: Vec<String>,
    /// "before-sizing" or "after-sizing" when clustering ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_order: Option<String>,
    pub modeling: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    /// Input name to SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub notes: RunNotes,
}

/// A heating network model: graph, the projection its plane coordinates use,
/// and where it came from.
#[derive(Debug, Clone)]
pub struct Model {
    pub graph: NetworkGraph,
    pub projection: Projection,
    pub provenance: Provenance,
}

impl Model {
    pub fn new(graph: NetworkGraph, projection: Projection) -> Self {
        Model {
            graph,
            projection,
            provenance: Provenance {
                notes: RunNotes {
                    modeling: MODELING_NOTES.iter().map(|s| s.to_string()).collect(),
                    ..Default::default()
                },
                ..Default::default()
            },
        }
    }
}
