use std::collections::{BTreeMap, BTreeSet};

use super::ClusterAssignment;
use crate::assemble::{mean_year, MIN_SERVICE_LENGTH_M};
use crate::demand::ProfileBank;
use crate::error::{Error, Result};
use crate::netgraph::{NetworkGraph, Node, NodeId, NodeKind, PipeEdge};

pub fn consumer_node_id(cluster: usize) -> NodeId {
    NodeId::new(format!("C:{cluster:05}"))
}

/// Replaces each cluster of Building nodes by one Consumer node at the
/// cluster centroid, attached to the nearest junction.
///
/// `members[i]` is the building whose label is `assignment.labels[i]`; the
/// list must name every Building node exactly once. Returns the consumer ids
/// in cluster order.
pub fn aggregate_clusters(
    g: &mut NetworkGraph,
    members: &[NodeId],
    assignment: &ClusterAssignment,
    bank: &ProfileBank,
) -> Result<Vec<NodeId>> {
    let buildings: BTreeSet<&NodeId> = g.nodes_of_kind(NodeKind::Building).map(|n| &n.id).collect();
    let listed: BTreeSet<&NodeId> = members.iter().collect();
    if members.len() != assignment.labels.len() || listed.len() != members.len() || listed != buildings {
        return Err(Error::Graph(
            "cluster assignment is not a partition of the building nodes".into(),
        ));
    }
    let mut groups: Vec<Vec<&NodeId>> = vec![Vec::new(); assignment.k()];
    for (id, &label) in members.iter().zip(&assignment.labels) {
        groups
            .get_mut(label)
            .ok_or_else(|| Error::Graph(format!("cluster label {label} out of range")))?
            .push(id);
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::Graph("cluster assignment has an empty cluster".into()));
    }

    let mut consumers = Vec::with_capacity(groups.len());
    for (c, group) in groups.iter_mut().enumerate() {
        group.sort();
        let mut node = Node::new(consumer_node_id(c), NodeKind::Consumer, assignment.centroids[c]);
        let mut mix: BTreeMap<_, f64> = BTreeMap::new();
        let (mut annual, mut year_sum, mut years) = (0.0, 0i64, 0usize);
        for id in group.iter() {
            let a = &g.node(id).unwrap().attrs;
            annual += a.annual_demand.unwrap_or(0.0);
            if a.demand_by_usage.is_empty() {
                if let (Some(u), Some(d)) = (a.usage_type, a.annual_demand) {
                    *mix.entry(u).or_default() += d;
                }
            }
            for (u, d) in &a.demand_by_usage {
                *mix.entry(*u).or_default() += d;
            }
            if let Some(y) = a.construction_year {
                year_sum += y as i64;
                years += 1;
            }
        }
        node.attrs.annual_demand = Some(annual);
        node.attrs.construction_year = (years > 0).then(|| mean_year(year_sum, years));
        node.attrs.nominal_load = Some(bank.peak(&mix));
        node.attrs.demand_by_usage = mix;
        node.attrs.member_count = Some(group.len() as u32);
        if group.len() == 1 {
            let a = &g.node(group[0]).unwrap().attrs;
            node.attrs.usage_type = a.usage_type;
            node.attrs.source_id = a.source_id.clone();
        }
        consumers.push(node);
    }

    for id in members {
        g.remove_node(id)?;
    }
    let junctions: Vec<(NodeId, _)> = g
        .nodes_of_kind(NodeKind::Junction)
        .map(|n| (n.id.clone(), n.pos))
        .collect();
    if junctions.is_empty() {
        return Err(Error::Graph("no junction left to attach consumers to".into()));
    }
    let mut ids = Vec::with_capacity(consumers.len());
    for node in consumers {
        let (jid, jpos) = junctions
            .iter()
            .min_by(|a, b| {
                a.1.dist2(&node.pos)
                    .total_cmp(&b.1.dist2(&node.pos))
                    .then(a.0.cmp(&b.0))
            })
            .unwrap();
        let len = jpos.dist(&node.pos).max(MIN_SERVICE_LENGTH_M);
        let id = node.id.clone();
        g.add_node(node)?;
        g.add_edge(PipeEdge::service(jid.clone(), id.clone(), len))?;
        ids.push(id);
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{default_slp_table, WeatherSeries};
    use crate::geo::PlanePoint;
    use crate::ingest::UsageType;

    fn bank() -> ProfileBank {
        ProfileBank::new(&WeatherSeries::constant(5.0).unwrap(), &default_slp_table(), 2023).unwrap()
    }

    fn city() -> NetworkGraph {
        let mut g = NetworkGraph::new();
        g.add_node(Node::junction("J1", PlanePoint::new(0.0, 0.0))).unwrap();
        g.add_node(Node::junction("J2", PlanePoint::new(100.0, 0.0))).unwrap();
        g.add_edge(PipeEdge::new("J1", "J2", 100.0)).unwrap();
        for (id, x, demand, year) in [("B:1", 10.0, 10_000.0, 1960), ("B:2", 90.0, 20_000.0, 1980)] {
            let mut n = Node::new(id, NodeKind::Building, PlanePoint::new(x, 10.0));
            n.attrs.annual_demand = Some(demand);
            n.attrs.construction_year = Some(year);
            n.attrs.usage_type = Some(UsageType::Residential);
            n.attrs.demand_by_usage = BTreeMap::from([(UsageType::Residential, demand)]);
            g.add_node(n).unwrap();
        }
        g.add_edge(PipeEdge::service("J1", "B:1", 10.0)).unwrap();
        g.add_edge(PipeEdge::service("J2", "B:2", 10.0)).unwrap();
        g
    }

    #[test]
    fn sums_and_means() {
        let mut g = city();
        let a = ClusterAssignment {
            labels: vec![0, 0],
            centroids: vec![PlanePoint::new(50.0, 10.0)],
            iterations: 1,
            history: vec![],
        };
        let ids = aggregate_clusters(&mut g, &["B:1".into(), "B:2".into()], &a, &bank()).unwrap();
        let c = g.node(&ids[0]).unwrap();
        assert_eq!(c.attrs.annual_demand, Some(30_000.0));
        assert_eq!(c.attrs.construction_year, Some(1970));
        assert_eq!(c.attrs.member_count, Some(2));
        assert_eq!(g.nodes_of_kind(NodeKind::Building).count(), 0);
        assert_eq!(g.degree(&ids[0]), 1);
    }

    #[test]
    fn singleton_keeps_attributes() {
        let mut g = city();
        let a = ClusterAssignment {
            labels: vec![0, 1],
            centroids: vec![PlanePoint::new(10.0, 10.0), PlanePoint::new(90.0, 10.0)],
            iterations: 1,
            history: vec![],
        };
        let b = bank();
        let before = g.node(&"B:1".into()).unwrap().attrs.clone();
        let ids = aggregate_clusters(&mut g, &["B:1".into(), "B:2".into()], &a, &b).unwrap();
        let c = g.node(&ids[0]).unwrap();
        assert_eq!(c.pos, PlanePoint::new(10.0, 10.0));
        assert_eq!(c.attrs.annual_demand, before.annual_demand);
        assert_eq!(c.attrs.construction_year, before.construction_year);
        assert_eq!(c.attrs.nominal_load, Some(b.peak(&before.demand_by_usage)));
    }

    #[test]
    fn rejects_non_partition() {
        let mut g = city();
        let a = ClusterAssignment {
            labels: vec![0],
            centroids: vec![PlanePoint::new(10.0, 10.0)],
            iterations: 1,
            history: vec![],
        };
        assert!(aggregate_clusters(&mut g, &["B:1".into()], &a, &bank()).is_err());
    }
}
