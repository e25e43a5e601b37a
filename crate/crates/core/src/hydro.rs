//! Nominal mass flows, flow routing to supply plants and pipe-diameter
//! selection against a discrete catalog.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::load_catalog;
use crate::netgraph::{EdgeId, NetworkGraph, NodeId, NodeKind};

const DEFAULT_CATALOG_CSV: &str = include_str!("../data/default_catalog.csv");

const RE_LAMINAR: f64 = 2300.0;
const RE_TURBULENT: f64 = 4000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidProps {
    /// kg/m³
    pub rho: f64,
    /// kJ/(kg·K)
    pub cp: f64,
    /// Pa·s
    pub mu: f64,
}

impl Default for FluidProps {
    /// Water at about 85 °C.
    fn default() -> Self {
        FluidProps {
            rho: 960.0,
            cp: 4.18,
            mu: 3.55e-4,
        }
    }
}

impl FluidProps {
    pub fn validate(&self) -> Result<()> {
        if [self.rho, self.cp, self.mu].iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config("fluid properties must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipeCatalogEntry {
    pub dn: String,
    /// m
    pub inner_diameter: f64,
    pub roughness_mm: f64,
}

/// Non-empty pipe series ordered by strictly increasing inner diameter.
#[derive(Debug, Clone, PartialEq)]
pub struct PipeCatalog {
    entries: Vec<PipeCatalogEntry>,
}

impl PipeCatalog {
    pub fn new(entries: Vec<PipeCatalogEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Config("pipe catalog is empty".into()));
        }
        for e in &entries {
            if !(e.inner_diameter > 0.0 && e.roughness_mm >= 0.0) {
                return Err(Error::Config(format!("catalog entry {} has invalid dimensions", e.dn)));
            }
        }
        if entries.windows(2).any(|w| w[0].inner_diameter >= w[1].inner_diameter) {
            return Err(Error::Config("catalog diameters must be strictly increasing".into()));
        }
        Ok(PipeCatalog { entries })
    }

    pub fn entries(&self) -> &[PipeCatalogEntry] {
        &self.entries
    }

    pub fn smallest(&self) -> &PipeCatalogEntry {
        &self.entries[0]
    }

    pub fn largest(&self) -> &PipeCatalogEntry {
        self.entries.last().unwrap()
    }
}

/// DN25 to DN500 with typical steel inner diameters and 0.1 mm roughness.
pub fn default_catalog() -> PipeCatalog {
    load_catalog(DEFAULT_CATALOG_CSV).expect("bundled catalog is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizingConfig {
    /// Substation temperature spread, K.
    pub delta_t: f64,
    /// Pressure-gradient limit, Pa/m.
    pub r_max: f64,
    /// Velocity limit, m/s.
    pub v_max: f64,
    pub catalog: PipeCatalog,
}

impl Default for SizingConfig {
    fn default() -> Self {
        SizingConfig {
            delta_t: 30.0,
            r_max: 250.0,
            v_max: 3.0,
            catalog: default_catalog(),
        }
    }
}

impl SizingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_t > 0.0 && self.r_max > 0.0 && self.v_max > 0.0) {
            return Err(Error::Config("delta_t, r_max and v_max must be positive".into()));
        }
        Ok(())
    }
}

/// Design mass flow in kg/s for a thermal load `q_kw`: `q / (cp * dT)`.
pub fn nominal_mass_flow(q_kw: f64, cfg: &SizingConfig, fluid: &FluidProps) -> f64 {
    q_kw / (fluid.cp * cfg.delta_t)
}

/// Darcy friction factor. Laminar `64/Re` below 2300, Swamee–Jain from 4000,
/// linear in Re in between.
pub fn friction_factor(re: f64, rel_rough: f64) -> f64 {
    let swamee_jain = |re: f64| {
        let l = (rel_rough / 3.7 + 5.74 / re.powf(0.9)).log10();
        0.25 / (l * l)
    };
    if re < RE_LAMINAR {
        64.0 / re
    } else if re >= RE_TURBULENT {
        swamee_jain(re)
    } else {
        let t = (re - RE_LAMINAR) / (RE_TURBULENT - RE_LAMINAR);
        (1.0 - t) * (64.0 / RE_LAMINAR) + t * swamee_jain(RE_TURBULENT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeHydraulics {
    /// Pa/m
    pub gradient: f64,
    /// m/s
    pub velocity: f64,
    pub reynolds: f64,
}

/// Darcy–Weisbach pressure gradient for a mass flow through a catalog pipe.
pub fn pressure_gradient(m_dot: f64, entry: &PipeCatalogEntry, fluid: &FluidProps) -> PipeHydraulics {
    if m_dot <= 0.0 {
        return PipeHydraulics {
            gradient: 0.0,
            velocity: 0.0,
            reynolds: 0.0,
        };
    }
    let d = entry.inner_diameter;
    let velocity = 4.0 * m_dot / (fluid.rho * PI * d * d);
    let reynolds = 4.0 * m_dot / (PI * d * fluid.mu);
    let lambda = friction_factor(reynolds, entry.roughness_mm * 1e-3 / d);
    PipeHydraulics {
        gradient: lambda * fluid.rho * velocity * velocity / (2.0 * d),
        velocity,
        reynolds,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiameterChoice<'a> {
    pub entry: &'a PipeCatalogEntry,
    /// False when even the largest pipe exceeds a limit.
    pub feasible: bool,
}

/// Smallest catalog pipe meeting both the gradient and the velocity limit.
pub fn select_diameter<'a>(m_dot: f64, cfg: &'a SizingConfig, fluid: &FluidProps) -> DiameterChoice<'a> {
    let ok = |e: &PipeCatalogEntry| {
        let h = pressure_gradient(m_dot, e, fluid);
        h.gradient <= cfg.r_max && h.velocity <= cfg.v_max
    };
    match cfg.catalog.entries().iter().find(|e| ok(e)) {
        Some(entry) => DiameterChoice { entry, feasible: true },
        None => DiameterChoice {
            entry: cfg.catalog.largest(),
            feasible: false,
        },
    }
}

/// Result of routing every demand node's design flow to its nearest plant.
#[derive(Debug, Clone, Default)]
pub struct FlowRouting {
    /// Net flow per edge, positive in the edge's `u -> v` direction, kg/s.
    pub signed: BTreeMap<EdgeId, f64>,
    /// Supplying plant per demand node.
    pub plant_of: BTreeMap<NodeId, NodeId>,
    /// Design flow per demand node, kg/s.
    pub demand: BTreeMap<NodeId, f64>,
}

impl FlowRouting {
    pub fn magnitude(&self, e: EdgeId) -> f64 {
        self.signed.get(&e).map_or(0.0, |f| f.abs())
    }
}

/// Routes each Building/Consumer node's nominal flow along its shortest path
/// from the nearest plant (ties to the smaller plant id). Missing nominal
/// loads count as zero.
pub fn route_flows(g: &NetworkGraph, cfg: &SizingConfig, fluid: &FluidProps) -> Result<FlowRouting> {
    let plants: Vec<&NodeId> = g.nodes_of_kind(NodeKind::Plant).map(|n| &n.id).collect();
    if plants.is_empty() {
        return Err(Error::Infeasible("no supply node".into()));
    }
    let fields: Vec<HashMap<NodeId, f64>> = plants.iter().map(|p| g.distances_from(p)).collect::<Result<_>>()?;

    let mut out = FlowRouting::default();
    for id in g.edge_ids() {
        out.signed.insert(id, 0.0);
    }
    let mut unreachable = Vec::new();
    for node in g.nodes().filter(|n| n.kind.is_demand()) {
        let m_dot = nominal_mass_flow(node.attrs.nominal_load.unwrap_or(0.0), cfg, fluid);
        // plants are in ascending id order, so strict < keeps the smaller id on ties
        let mut best: Option<(usize, f64)> = None;
        for (i, field) in fields.iter().enumerate() {
            if let Some(&d) = field.get(&node.id) {
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((i, d));
                }
            }
        }
        let Some((pi, _)) = best else {
            unreachable.push(node.id.to_string());
            continue;
        };
        let path = g
            .descend(&node.id, &fields[pi])
            .ok_or_else(|| Error::Infeasible(format!("no path from {} to plant", node.id)))?;
        // path runs demand -> plant; flow runs plant -> demand
        for w in path.windows(2) {
            let e = g.edge_between(&w[0], &w[1]).expect("path follows edges");
            let sign = if g.edge(e).unwrap().u == w[1] { 1.0 } else { -1.0 };
            *out.signed.get_mut(&e).unwrap() += sign * m_dot;
        }
        out.plant_of.insert(node.id.clone(), plants[pi].clone());
        out.demand.insert(node.id.clone(), m_dot);
    }
    if !unreachable.is_empty() {
        return Err(Error::Infeasible(format!(
            "demand nodes not reachable from any plant: {}",
            unreachable.join(", ")
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SizingReport {
    /// Edges whose flow exceeds the largest catalog pipe, as `(u, v)`.
    pub flagged: Vec<(NodeId, NodeId)>,
    pub total_demand_flow: f64,
}

/// Assigns flow, DN and inner diameter to every edge.
pub fn size_network(g: &mut NetworkGraph, cfg: &SizingConfig, fluid: &FluidProps) -> Result<SizingReport> {
    cfg.validate()?;
    fluid.validate()?;
    let routing = route_flows(g, cfg, fluid)?;
    let mut report = SizingReport {
        total_demand_flow: routing.demand.values().sum(),
        ..Default::default()
    };
    for id in g.edge_ids() {
        let flow = routing.magnitude(id);
        let choice = select_diameter(flow, cfg, fluid);
        let (dn, d, feasible) = (choice.entry.dn.clone(), choice.entry.inner_diameter, choice.feasible);
        let e = g.edge_mut(id).unwrap();
        e.nominal_flow = Some(flow);
        e.dn = Some(dn);
        e.inner_diameter = Some(d);
        if !feasible {
            report.flagged.push((e.u.clone(), e.v.clone()));
        }
    }
    Ok(report)
}

/// Sizes a single edge for a given flow, returning whether it fits the catalog.
pub fn size_edge(g: &mut NetworkGraph, id: EdgeId, flow: f64, cfg: &SizingConfig, fluid: &FluidProps) -> Result<bool> {
    let choice = select_diameter(flow, cfg, fluid);
    let (dn, d, feasible) = (choice.entry.dn.clone(), choice.entry.inner_diameter, choice.feasible);
    let e = g
        .edge_mut(id)
        .ok_or_else(|| Error::Graph(format!("edge {} does not exist", id.0)))?;
    e.nominal_flow = Some(flow);
    e.dn = Some(dn);
    e.inner_diameter = Some(d);
    Ok(feasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::PlanePoint;
    use crate::netgraph::{Node, PipeEdge};

    fn entry(dn: &str, d: f64) -> PipeCatalogEntry {
        PipeCatalogEntry {
            dn: dn.into(),
            inner_diameter: d,
            roughness_mm: 0.1,
        }
    }

    fn small_catalog() -> SizingConfig {
        SizingConfig {
            catalog: PipeCatalog::new(vec![
                entry("DN50", 0.054),
                entry("DN80", 0.0825),
                entry("DN100", 0.1071),
            ])
            .unwrap(),
            ..SizingConfig::default()
        }
    }

    /// Colebrook–White by fixed-point iteration on 1/sqrt(lambda).
    fn colebrook(re: f64, rr: f64) -> f64 {
        let mut x = 8.0_f64; // 1/sqrt(lambda)
        for _ in 0..200 {
            x = -2.0 * (rr / 3.7 + 2.51 * x / re).log10();
        }
        1.0 / (x * x)
    }

    #[test]
    fn mass_flow() {
        let cfg = SizingConfig::default();
        let fl = FluidProps::default();
        assert!((nominal_mass_flow(125.4, &cfg, &fl) - 1.0).abs() < 1e-12);
        assert_eq!(nominal_mass_flow(0.0, &cfg, &fl), 0.0);
        assert_eq!(
            nominal_mass_flow(50.0, &cfg, &fl) * 2.0,
            nominal_mass_flow(100.0, &cfg, &fl)
        );
    }

    #[test]
    fn friction() {
        let lam = friction_factor(66_430.0, 1e-4 / 0.054);
        assert!((lam - 0.0257).abs() / 0.0257 < 0.02, "{lam}");
        assert_eq!(friction_factor(1000.0, 1e-3), 0.064);
        let c = colebrook(66_430.0, 1e-4 / 0.054);
        assert!((lam - c).abs() / c < 0.05);
    }

    #[test]
    fn friction_continuity() {
        for rr in [1e-6, 1e-3, 5e-2] {
            for re in [RE_LAMINAR, RE_TURBULENT] {
                let below = friction_factor(re * (1.0 - 1e-13), rr);
                let at = friction_factor(re, rr);
                assert!((below - at).abs() < 1e-9, "re {re} rr {rr}: {below} vs {at}");
            }
        }
    }

    #[test]
    fn gradient_example() {
        let h = pressure_gradient(1.0, &entry("DN50", 0.054), &FluidProps::default());
        assert!((h.velocity - 0.455).abs() / 0.455 < 0.01, "{}", h.velocity);
        assert!((h.gradient - 47.0).abs() / 47.0 < 0.02, "{}", h.gradient);
        let z = pressure_gradient(0.0, &entry("DN50", 0.054), &FluidProps::default());
        assert_eq!((z.gradient, z.velocity), (0.0, 0.0));
        let q = pressure_gradient(4.0, &entry("DN50", 0.054), &FluidProps::default());
        assert!((q.velocity / h.velocity - 4.0).abs() < 1e-9);
        assert!((q.gradient / h.gradient / 16.0 - 1.0).abs() < 0.2);
    }

    #[test]
    fn diameter_selection() {
        let cfg = small_catalog();
        let fl = FluidProps::default();
        assert_eq!(select_diameter(1.0, &cfg, &fl).entry.dn, "DN50");
        let dn50 = pressure_gradient(3.0, &cfg.catalog.entries()[0], &fl).gradient;
        assert!((dn50 - 398.0).abs() / 398.0 < 0.02, "{dn50}");
        let pick = select_diameter(3.0, &cfg, &fl);
        assert_eq!(pick.entry.dn, "DN80");
        let dn80 = pressure_gradient(3.0, pick.entry, &fl).gradient;
        assert!((dn80 - 45.0).abs() / 45.0 < 0.05, "{dn80}");
        assert_eq!(select_diameter(0.0, &cfg, &fl).entry.dn, "DN50");
        let huge = select_diameter(500.0, &cfg, &fl);
        assert_eq!((huge.entry.dn.as_str(), huge.feasible), ("DN100", false));
        assert!(PipeCatalog::new(vec![]).is_err());
    }

    fn line_graph() -> NetworkGraph {
        let mut g = NetworkGraph::new();
        g.add_node(Node::new("P", NodeKind::Plant, PlanePoint::new(0.0, 0.0)))
            .unwrap();
        let mut a = Node::new("A", NodeKind::Building, PlanePoint::new(10.0, 0.0));
        a.attrs.nominal_load = Some(0.5 * 125.4);
        let mut b = Node::new("B", NodeKind::Building, PlanePoint::new(20.0, 0.0));
        b.attrs.nominal_load = Some(0.2 * 125.4);
        g.add_node(a).unwrap();
        g.add_node(b).unwrap();
        g.add_edge(PipeEdge::new("P", "A", 10.0)).unwrap();
        g.add_edge(PipeEdge::new("A", "B", 10.0)).unwrap();
        g
    }

    #[test]
    fn line_routing_and_sizing() {
        let mut g = line_graph();
        let cfg = SizingConfig::default();
        let fl = FluidProps::default();
        let r = route_flows(&g, &cfg, &fl).unwrap();
        let pa = g.edge_between(&"P".into(), &"A".into()).unwrap();
        let ab = g.edge_between(&"A".into(), &"B".into()).unwrap();
        assert!((r.signed[&pa] - 0.7).abs() < 1e-12);
        assert!((r.signed[&ab] - 0.2).abs() < 1e-12);
        size_network(&mut g, &cfg, &fl).unwrap();
        assert!((g.edge(pa).unwrap().nominal_flow.unwrap() - 0.7).abs() < 1e-12);
        assert!(g.edge(pa).unwrap().inner_diameter >= g.edge(ab).unwrap().inner_diameter);
    }

    #[test]
    fn equidistant_plants_pick_smaller_id() {
        let mut g = NetworkGraph::new();
        g.add_node(Node::new("P2", NodeKind::Plant, PlanePoint::new(-10.0, 0.0)))
            .unwrap();
        g.add_node(Node::new("P1", NodeKind::Plant, PlanePoint::new(10.0, 0.0)))
            .unwrap();
        let mut b = Node::new("B", NodeKind::Building, PlanePoint::new(0.0, 0.0));
        b.attrs.nominal_load = Some(10.0);
        g.add_node(b).unwrap();
        g.add_edge(PipeEdge::new("B", "P2", 10.0)).unwrap();
        g.add_edge(PipeEdge::new("B", "P1", 10.0)).unwrap();
        let r = route_flows(&g, &SizingConfig::default(), &FluidProps::default()).unwrap();
        assert_eq!(r.plant_of[&NodeId::from("B")], NodeId::from("P1"));
    }

    #[test]
    fn missing_plant_and_unreachable() {
        let mut g = line_graph();
        g.remove_node(&"P".into()).unwrap();
        let err = route_flows(&g, &SizingConfig::default(), &FluidProps::default()).unwrap_err();
        assert_eq!(err.exit_code(), 3);

        let mut g = line_graph();
        g.add_node(Node::new("Z", NodeKind::Building, PlanePoint::new(99.0, 0.0)))
            .unwrap();
        let err = route_flows(&g, &SizingConfig::default(), &FluidProps::default()).unwrap_err();
        assert!(err.to_string().contains('Z'));
    }

    #[test]
    fn zero_demand_gets_smallest_pipe() {
        let mut g = line_graph();
        for id in ["A", "B"] {
            g.node_mut(&id.into()).unwrap().attrs.nominal_load = Some(0.0);
        }
        let cfg = SizingConfig::default();
        size_network(&mut g, &cfg, &FluidProps::default()).unwrap();
        assert!(g
            .edges()
            .all(|(_, e)| e.dn.as_deref() == Some(cfg.catalog.smallest().dn.as_str())));
    }
}
