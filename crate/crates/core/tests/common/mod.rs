//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use dhforge::config::{Overrides, RunConfig};
use dhforge::geo::{point_segment_distance, PlanePoint};
use dhforge::hydro::FlowRouting;
use dhforge::netgraph::{NetworkGraph, Node, NodeId, NodeKind, PipeEdge};
use dhforge::synth;

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.0.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

/// Writes the toy city into `dir` and loads its config.
pub fn toy_config(dir: &Path, cluster_k: Option<usize>) -> RunConfig {
    let path = synth::write_inputs(&synth::toy_city(), dir, 42, cluster_k).expect("write toy inputs");
    RunConfig::load(&path, &Overrides::default()).expect("load toy config")
}

/// Implicit Colebrook–White friction factor, iterated to convergence.
pub fn colebrook(re: f64, rel_rough: f64) -> f64 {
    let mut x: f64 = 0.02_f64.powf(-0.5);
    for _ in 0..200 {
        let next = -2.0 * (rel_rough / 3.7 + 2.51 * x / re).log10();
        if (next - x).abs() < 1e-14 * x {
            x = next;
            break;
        }
        x = next;
    }
    1.0 / (x * x)
}

/// Points every `step` meters along each segment, endpoints included.
pub fn densify(segments: &[(PlanePoint, PlanePoint)], step: f64) -> Vec<PlanePoint> {
    let mut out = Vec::new();
    for &(a, b) in segments {
        let n = (a.dist(&b) / step).ceil().max(1.0) as usize;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            out.push(PlanePoint::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        }
    }
    out
}

fn dist_to_segments(p: PlanePoint, segments: &[(PlanePoint, PlanePoint)]) -> f64 {
    segments
        .iter()
        .map(|&(a, b)| point_segment_distance(p, a, b).map_or(p.dist(&a), |(d, _)| d))
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance between two segment sets, sampled every `step` meters.
pub fn hausdorff(a: &[(PlanePoint, PlanePoint)], b: &[(PlanePoint, PlanePoint)], step: f64) -> f64 {
    let directed = |from: &[(PlanePoint, PlanePoint)], to: &[(PlanePoint, PlanePoint)]| {
        densify(from, step)
            .into_iter()
            .map(|p| dist_to_segments(p, to))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

pub fn graph_segments(g: &NetworkGraph) -> Vec<(PlanePoint, PlanePoint)> {
    g.edges()
        .map(|(_, e)| (g.node(&e.u).unwrap().pos, g.node(&e.v).unwrap().pos))
        .collect()
}

/// Within-cluster sum of squares of a labelling.
pub fn wcss(points: &[PlanePoint], labels: &[usize], k: usize) -> f64 {
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (p, &l) in points.iter().zip(labels) {
        sums[l].0 += p.x;
        sums[l].1 += p.y;
        sums[l].2 += 1;
    }
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| {
            let (sx, sy, n) = sums[l];
            let c = PlanePoint::new(sx / n as f64, sy / n as f64);
            p.dist2(&c)
        })
        .sum()
}

/// Minimum within-cluster sum of squares over every partition of `points`
/// into exactly `k` non-empty clusters.
pub fn exhaustive_optimum(points: &[PlanePoint], k: usize) -> f64 {
    let n = points.len();
    assert!(k >= 1 && k <= n && n <= 12);
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    // restricted growth strings enumerate each set partition once
    fn walk(i: usize, used: usize, k: usize, labels: &mut Vec<usize>, points: &[PlanePoint], best: &mut f64) {
        let n = labels.len();
        if n - i < k - used {
            return;
        }
        if i == n {
            if used == k {
                *best = best.min(wcss(points, labels, k));
            }
            return;
        }
        for l in 0..=used.min(k - 1) {
            labels[i] = l;
            walk(i + 1, used.max(l + 1), k, labels, points, best);
        }
    }
    walk(0, 0, k, &mut labels, points, &mut best);
    best
}

/// A random graph of building, plant and junction hubs joined by chains of
/// pass-through junctions. Lengths are multiples of 1/8 m so sums are exact.
pub fn chain_graph(rng: &mut Rng) -> NetworkGraph {
    let mut g = NetworkGraph::new();
    let hubs = 3 + rng.below(8);
    let mut hub_ids = Vec::new();
    for h in 0..hubs {
        let kind = match rng.below(4) {
            0 => NodeKind::Building,
            1 => NodeKind::Plant,
            _ => NodeKind::Junction,
        };
        let id = NodeId::new(format!("H{h:03}"));
        let pos = PlanePoint::new(rng.range(0.0, 1000.0), rng.range(0.0, 1000.0));
        g.add_node(Node::new(id.clone(), kind, pos)).unwrap();
        hub_ids.push(id);
    }
    let mut pairs = Vec::new();
    for h in 1..hubs {
        pairs.push((rng.below(h), h));
    }
    for _ in 0..rng.below(4) {
        let (a, b) = (rng.below(hubs), rng.below(hubs));
        if a != b {
            pairs.push((a, b));
        }
    }
    for (a, b) in pairs {
        let (ua, ub) = (hub_ids[a].clone(), hub_ids[b].clone());
        let (pa, pb) = (g.node(&ua).unwrap().pos, g.node(&ub).unwrap().pos);
        let inner = rng.below(5);
        let mut chain = vec![ua];
        for i in 0..inner {
            let t = (i + 1) as f64 / (inner + 1) as f64;
            let id = g.fresh_id("J");
            let pos = PlanePoint::new(
                pa.x + t * (pb.x - pa.x) + rng.range(-5.0, 5.0),
                pa.y + t * (pb.y - pa.y),
            );
            g.add_node(Node::junction(id.clone(), pos)).unwrap();
            chain.push(id);
        }
        chain.push(ub);
        let dn = rng.chance(0.3).then(|| "DN50".to_string());
        for w in chain.windows(2) {
            if g.edge_between(&w[0], &w[1]).is_some() {
                continue;
            }
            let mut e = PipeEdge::new(w[0].clone(), w[1].clone(), (1 + rng.below(800)) as f64 / 8.0);
            // occasionally break a chain with a different pipe
            e.dn = if rng.chance(0.1) {
                Some("DN80".into())
            } else {
                dn.clone()
            };
            g.add_edge(e).unwrap();
        }
    }
    g
}

/// Checks conservation of routed flow: zero net flow at junctions, each
/// demand node receives its design flow and each plant sends the flows of
/// the nodes it supplies.
pub fn check_flow_conservation(g: &NetworkGraph, routing: &FlowRouting, tol: f64) -> Result<(), String> {
    let mut net: BTreeMap<&NodeId, f64> = BTreeMap::new();
    for (id, e) in g.edges() {
        let f = routing.signed[&id];
        *net.entry(&e.v).or_default() += f;
        *net.entry(&e.u).or_default() -= f;
    }
    let mut supplied: BTreeMap<&NodeId, f64> = BTreeMap::new();
    for (node, plant) in &routing.plant_of {
        *supplied.entry(plant).or_default() += routing.demand[node];
    }
    for n in g.nodes() {
        let inflow = net.get(&n.id).copied().unwrap_or(0.0);
        let expected = match n.kind {
            NodeKind::Junction => 0.0,
            NodeKind::Building | NodeKind::Consumer => routing.demand[&n.id],
            NodeKind::Plant => -supplied.get(&n.id).copied().unwrap_or(0.0),
        };
        if (inflow - expected).abs() > tol {
            return Err(format!(
                "node {} has net inflow {inflow} kg/s, expected {expected}",
                n.id
            ));
        }
    }
    Ok(())
}
