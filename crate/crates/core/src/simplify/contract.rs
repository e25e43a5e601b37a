use crate::netgraph::{NetworkGraph, NodeId, NodeKind, PipeEdge};

/// Removes junctions of degree two whose two pipes are identical, merging the
/// pipes into one with the summed length. Runs to a fixpoint and returns the
/// number of removed junctions.
///
/// A junction is kept when its pipes differ in any attribute or when merging
/// would duplicate an existing edge.
pub fn contract_degree2(g: &mut NetworkGraph) -> usize {
    let mut removed = 0;
    loop {
        let candidates: Vec<NodeId> = g
            .nodes_of_kind(NodeKind::Junction)
            .filter(|n| g.degree(&n.id) == 2)
            .map(|n| n.id.clone())
            .collect();
        let mut changed = false;
        for id in candidates {
            if g.degree(&id) != 2 {
                continue;
            }
            let [(a, ea), (c, ec)]: [(NodeId, _); 2] = g
                .neighbors(&id)
                .map(|(n, e)| (n.clone(), e))
                .collect::<Vec<_>>()
                .try_into()
                .expect("degree two");
            let (first, second) = (g.edge(ea).unwrap(), g.edge(ec).unwrap());
            if !first.same_pipe(second) || g.edge_between(&a, &c).is_some() {
                continue;
            }
            let merged = PipeEdge {
                u: a.clone(),
                v: c.clone(),
                length: first.length + second.length,
                ..first.clone()
            };
            g.remove_node(&id).expect("candidate exists");
            g.add_edge(merged).expect("endpoints exist and are not yet adjacent");
            removed += 1;
            changed = true;
        }
        if !changed {
            return removed;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::PlanePoint;
    use crate::netgraph::Node;

    fn path(kind_b: NodeKind) -> NetworkGraph {
        let mut g = NetworkGraph::new();
        g.add_node(Node::junction("A", PlanePoint::new(0.0, 0.0))).unwrap();
        g.add_node(Node::new("B", kind_b, PlanePoint::new(3.0, 0.0))).unwrap();
        g.add_node(Node::junction("C", PlanePoint::new(7.0, 0.0))).unwrap();
        g.add_edge(PipeEdge::new("A", "B", 3.0)).unwrap();
        g.add_edge(PipeEdge::new("B", "C", 4.0)).unwrap();
        g
    }

    #[test]
    fn merges_pass_through() {
        let mut g = path(NodeKind::Junction);
        assert_eq!(contract_degree2(&mut g), 1);
        assert_eq!(g.edge_count(), 1);
        let (_, e) = g.edges().next().unwrap();
        assert_eq!(e.length, 7.0);
    }

    #[test]
    fn keeps_buildings() {
        let mut g = path(NodeKind::Building);
        assert_eq!(contract_degree2(&mut g), 0);
        assert_eq!(g.node_count(), 3);
    }

    #[test]
    fn keeps_diameter_changes() {
        let mut g = path(NodeKind::Junction);
        let ids = g.edge_ids();
        g.edge_mut(ids[0]).unwrap().dn = Some("DN50".into());
        g.edge_mut(ids[1]).unwrap().dn = Some("DN80".into());
        assert_eq!(contract_degree2(&mut g), 0);
    }

    #[test]
    fn keeps_triangle_corner() {
        let mut g = path(NodeKind::Junction);
        g.add_edge(PipeEdge::new("A", "C", 7.5)).unwrap();
        // B can't merge into a duplicate A-C; A and C have degree 2 as well
        // but contracting either would also create a duplicate.
        assert_eq!(contract_degree2(&mut g), 0);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn long_chain_to_fixpoint() {
        let mut g = NetworkGraph::new();
        for i in 0..20 {
            g.add_node(Node::junction(format!("n{i:02}"), PlanePoint::new(i as f64, 0.0)))
                .unwrap();
        }
        for i in 0..19 {
            g.add_edge(PipeEdge::new(format!("n{i:02}"), format!("n{:02}", i + 1), 1.0))
                .unwrap();
        }
        assert_eq!(contract_degree2(&mut g), 18);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.total_length(), 19.0);
    }
}
