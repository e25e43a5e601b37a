//! Invariants checked on generated inputs.

mod common;

use proptest::prelude::*;

use common::{chain_graph, exhaustive_optimum, Rng};
use dhforge::geo::{point_segment_distance, GeoPoint, PlanePoint, Polygon, Projection};
use dhforge::netgraph::{NetworkGraph, Node, NodeId, NodeKind, PipeEdge, SegmentIndex};
use dhforge::rasterex::{thin, trace, Mask};
use dhforge::simplify::{contract_degree2, kmeans, kmeans_best_of, ClusterConfig};

fn geo() -> impl Strategy<Value = GeoPoint> {
    (-179.0..179.0f64, -80.0..80.0f64).prop_map(|(lon, lat)| GeoPoint { lon, lat })
}

fn plane(span: f64) -> impl Strategy<Value = PlanePoint> {
    (-span..span, -span..span).prop_map(|(x, y)| PlanePoint::new(x, y))
}

/// Random straight-edge graph over `n` junctions; edges of zero length are skipped.
fn random_graph(points: &[PlanePoint], pairs: &[(usize, usize)]) -> NetworkGraph {
    let mut g = NetworkGraph::new();
    for (i, p) in points.iter().enumerate() {
        g.add_node(Node::junction(format!("J{i:03}").as_str(), *p)).unwrap();
    }
    for &(a, b) in pairs {
        let (a, b) = (a % points.len(), b % points.len());
        let len = points[a].dist(&points[b]);
        if a == b || len == 0.0 {
            continue;
        }
        let (u, v) = (NodeId::new(format!("J{a:03}")), NodeId::new(format!("J{b:03}")));
        if g.edge_between(&u, &v).is_none() {
            g.add_edge(PipeEdge::new(u, v, len)).unwrap();
        }
    }
    g
}

fn mask_from(width: usize, height: usize, bits: &[bool]) -> Mask {
    let mut m = Mask::new(width, height);
    for (i, &b) in bits.iter().enumerate() {
        if b {
            m.set(i % width, i / width, true);
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projection_round_trip(origin in geo(), dlon in -0.2..0.2f64, dlat in -0.2..0.2f64) {
        let proj = Projection::new(origin).unwrap();
        let p = GeoPoint { lon: origin.lon + dlon, lat: (origin.lat + dlat).clamp(-89.0, 89.0) };
        let back = proj.unproject(proj.project(p));
        prop_assert!((back.lon - p.lon).abs() < 1e-9);
        prop_assert!((back.lat - p.lat).abs() < 1e-9);
    }

    #[test]
    fn polygon_area_ignores_ring_order(pts in prop::collection::vec(plane(500.0), 3..9), shift in 0usize..8) {
        // a star-shaped ring around the centroid of the points is simple
        let cx = pts.iter().map(|p| p.x).sum::<f64>() / pts.len() as f64;
        let cy = pts.iter().map(|p| p.y).sum::<f64>() / pts.len() as f64;
        let mut ring = pts.clone();
        ring.sort_by(|a, b| (a.y - cy).atan2(a.x - cx).total_cmp(&(b.y - cy).atan2(b.x - cx)));
        ring.dedup();
        prop_assume!(ring.len() >= 3);
        let close = |mut r: Vec<PlanePoint>| { r.push(r[0]); r };
        let Ok(forward) = Polygon::new(close(ring.clone()), vec![]) else { return Ok(()); };
        let Ok((_, area)) = forward.centroid_area() else { return Ok(()); };
        let mut rev = ring.clone();
        rev.reverse();
        let mut rot = ring.clone();
        rot.rotate_left(shift % ring.len());
        for other in [rev, rot] {
            let (_, a) = Polygon::new(close(other), vec![]).unwrap().centroid_area().unwrap();
            prop_assert!((a - area).abs() <= 1e-9 * area.max(1.0));
        }
    }

    #[test]
    fn nearest_edge_matches_brute_force(
        points in prop::collection::vec(plane(300.0), 2..15),
        pairs in prop::collection::vec((0usize..15, 0usize..15), 1..25),
        queries in prop::collection::vec(plane(500.0), 1..20),
    ) {
        let g = random_graph(&points, &pairs);
        prop_assume!(g.edge_count() > 0);
        let index = SegmentIndex::of_graph(&g, |_| true);
        for q in queries {
            let near = g.nearest_edge(q).unwrap();
            let brute = g
                .edges()
                .map(|(_, e)| {
                    let (a, b) = (g.node(&e.u).unwrap().pos, g.node(&e.v).unwrap().pos);
                    point_segment_distance(q, a, b).unwrap().0
                })
                .fold(f64::INFINITY, f64::min);
            prop_assert_eq!(near.distance, brute);
            prop_assert_eq!(index.nearest(q), Some(near));
        }
    }

    #[test]
    fn split_preserves_length(a in plane(300.0), b in plane(300.0), t in 0.0..1.0f64) {
        prop_assume!(a.dist(&b) > 1.0);
        let mut g = random_graph(&[a, b], &[(0, 1)]);
        let before = g.total_length();
        let foot = PlanePoint::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
        let id = g.edge_ids()[0];
        let j = g.split_edge(id, foot).unwrap();
        prop_assert!((g.total_length() - before).abs() <= 1e-9 * before);
        prop_assert!(g.contains_node(&j));
        prop_assert!(g.edge_count() <= 2);
    }

    #[test]
    fn contraction_keeps_lengths_and_distances(seed in any::<u64>()) {
        let original = chain_graph(&mut Rng::new(seed));
        let mut g = original.clone();
        let removed = contract_degree2(&mut g);
        prop_assert_eq!(g.node_count() + removed, original.node_count());
        prop_assert_eq!(g.total_length(), original.total_length());
        for n in original.nodes().filter(|n| n.kind != NodeKind::Junction) {
            prop_assert!(g.contains_node(&n.id));
        }
        let retained: Vec<NodeId> = g.nodes().map(|n| n.id.clone()).collect();
        for src in &retained {
            let (before, after) = (original.distances_from(src).unwrap(), g.distances_from(src).unwrap());
            for dst in &retained {
                match (before.get(dst), after.get(dst)) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-9 * x.max(1.0)),
                    (x, y) => prop_assert_eq!(x, y),
                }
            }
        }
        // a second pass finds nothing more
        prop_assert_eq!(contract_degree2(&mut g), 0);
    }

    #[test]
    fn kmeans_gives_k_nonempty_clusters(
        points in prop::collection::vec(plane(1000.0), 1..60),
        k in 1usize..20,
        seed in any::<u64>(),
    ) {
        prop_assume!(k <= points.len());
        let a = kmeans(&points, &ClusterConfig::new(k, seed)).unwrap();
        prop_assert_eq!(a.k(), k);
        prop_assert_eq!(a.labels.len(), points.len());
        prop_assert!(a.members().iter().all(|m| !m.is_empty()));
        prop_assert!(a.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-9));
        prop_assert_eq!(a, kmeans(&points, &ClusterConfig::new(k, seed)).unwrap());
    }

    #[test]
    fn kmeans_never_beats_exhaustive_optimum(points in prop::collection::vec(plane(100.0), 1..10), k in 1usize..4, seed in any::<u64>()) {
        prop_assume!(k <= points.len());
        let a = kmeans_best_of(&points, &ClusterConfig { restarts: 3, ..ClusterConfig::new(k, seed) }).unwrap();
        let got = common::wcss(&points, &a.labels, k);
        let opt = exhaustive_optimum(&points, k);
        prop_assert!(got >= opt - 1e-9 * opt.max(1.0));
    }

    #[test]
    fn thinning_is_subset_and_keeps_components((w, h, bits) in (3usize..24, 3usize..24).prop_flat_map(|(w, h)| {
        (Just(w), Just(h), prop::collection::vec(prop::bool::weighted(0.45), w * h))
    })) {
        let mask = mask_from(w, h, &bits);
        let skel = thin(&mask);
        prop_assert!(skel.is_subset_of(&mask));
        prop_assert_eq!(skel.component_count(), mask.component_count());
        prop_assert_eq!(thin(&skel), skel.clone());
    }

    #[test]
    fn tracing_partitions_the_skeleton((w, h, bits) in (3usize..24, 3usize..24).prop_flat_map(|(w, h)| {
        (Just(w), Just(h), prop::collection::vec(prop::bool::weighted(0.4), w * h))
    })) {
        let skel = thin(&mask_from(w, h, &bits));
        let lines = trace(&skel);
        let mut seen = std::collections::BTreeMap::new();
        for l in &lines {
            prop_assert!(l.len() >= 2);
            // a closed polyline (a ring, or a loop through a junction pixel)
            // counts its start pixel once, as an end
            let closed = l.first() == l.last() && l.len() > 2;
            let body = if closed { &l[..l.len() - 1] } else { &l[..] };
            for (i, p) in body.iter().enumerate() {
                prop_assert!(skel.get(p.0, p.1));
                let end = i == 0 || (!closed && i == body.len() - 1);
                let entry = seen.entry(*p).or_insert((0usize, 0usize));
                if end { entry.1 += 1 } else { entry.0 += 1 }
            }
            for w in l.windows(2) {
                let (dx, dy) = (w[0].0.abs_diff(w[1].0), w[0].1.abs_diff(w[1].1));
                prop_assert!(dx <= 1 && dy <= 1 && dx + dy > 0);
            }
        }
        for (p, (interior, ends)) in &seen {
            // interior pixels belong to exactly one polyline and are never endpoints
            prop_assert!(*interior <= 1, "pixel {:?} is interior to {} polylines", p, interior);
            prop_assert!(*interior == 0 || *ends == 0, "pixel {:?} is both an interior and an end pixel", p);
        }
        // only isolated pixels are left out
        for p in skel.pixels() {
            let lonely = (-1isize..=1).all(|dy| (-1isize..=1).all(|dx| (dx == 0 && dy == 0) || !skel.at(p.0 as isize + dx, p.1 as isize + dy)));
            prop_assert!(lonely || seen.contains_key(&p), "pixel {:?} not traced", p);
        }
    }
}
