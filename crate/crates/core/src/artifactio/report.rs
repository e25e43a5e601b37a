use std::collections::BTreeMap;
use std::fmt::Write;

use crate::model::Model;
use crate::netgraph::NodeKind;

/// Plain-text run summary. Every figure is derived from the model alone, so a
/// report regenerated from an imported document matches the original.
pub fn summarize(model: &Model) -> String {
    let g = &model.graph;
    let prov = &model.provenance;
    let mut s = String::new();
    let _ = writeln!(s, "district heating model summary");
    let _ = writeln!(s);
    let _ = writeln!(s, "nodes: {}", g.node_count());
    for kind in [
        NodeKind::Junction,
        NodeKind::Building,
        NodeKind::Plant,
        NodeKind::Consumer,
    ] {
        let _ = writeln!(s, "  {:<10} {}", kind.as_str(), g.nodes_of_kind(kind).count());
    }
    let service = g.edges().filter(|(_, e)| e.service).count();
    let _ = writeln!(s, "edges: {}", g.edge_count());
    let _ = writeln!(s, "  {:<10} {}", "main", g.edge_count() - service);
    let _ = writeln!(s, "  {:<10} {}", "service", service);
    // `+ 0.0` turns the -0.0 of empty sums into 0.0
    let _ = writeln!(s, "total length: {:.3} km", g.total_length() / 1000.0 + 0.0);

    let annual: f64 = g
        .nodes()
        .filter(|n| n.kind.is_demand())
        .filter_map(|n| n.attrs.annual_demand)
        .sum();
    let peak: f64 = g
        .nodes()
        .filter(|n| n.kind.is_demand())
        .filter_map(|n| n.attrs.nominal_load)
        .sum();
    let _ = writeln!(s, "annual demand: {:.3} MWh", annual / 1000.0 + 0.0);
    let _ = writeln!(s, "sum of nominal loads: {:.3} kW", peak + 0.0);

    let mut hist: BTreeMap<(u64, String), usize> = BTreeMap::new();
    let mut unsized_edges = 0usize;
    for (_, e) in g.edges() {
        match (&e.dn, e.inner_diameter) {
            (Some(dn), Some(d)) => *hist.entry(((d * 1e6).round() as u64, dn.clone())).or_default() += 1,
            _ => unsized_edges += 1,
        }
    }
    let _ = writeln!(s, "pipe diameters:");
    if hist.is_empty() {
        let _ = writeln!(s, "  (none sized)");
    }
    for ((_, dn), n) in &hist {
        let _ = writeln!(s, "  {dn:<10} {n}");
    }
    if unsized_edges > 0 && !hist.is_empty() {
        let _ = writeln!(s, "  {:<10} {unsized_edges}", "unsized_edges");
    }

    let notes = &prov.notes;
    let _ = writeln!(s, "skipped plants: {}", notes.skipped_plants.len());
    for p in &notes.skipped_plants {
        let _ = writeln!(s, "  {} ({:.1} m from network)", p.id, p.distance_m);
    }
    let _ = writeln!(s, "flagged edges: {}", notes.flagged_edges.len());
    for [u, v] in &notes.flagged_edges {
        let _ = writeln!(s, "  {u} - {v}");
    }
    if !notes.stages.is_empty() {
        let _ = writeln!(s, "stages: {}", notes.stages.join(" -> "));
    }
    if let Some(order) = &notes.cluster_order {
        let _ = writeln!(s, "clustering: {order}");
    }
    if !notes.warnings.is_empty() {
        let _ = writeln!(s, "warnings:");
        for w in &notes.warnings {
            let _ = writeln!(s, "  {w}");
        }
    }
    if !notes.modeling.is_empty() {
        let _ = writeln!(s, "modeling assumptions:");
        for m in &notes.modeling {
            let _ = writeln!(s, "  {m}");
        }
    }
    let _ = writeln!(s, "seed: {}", prov.seed);
    let _ = writeln!(
        s,
        "config hash: {}",
        if prov.config_hash.is_empty() {
            "-"
        } else {
            &prov.config_hash
        }
    );
    if !prov.inputs.is_empty() {
        let _ = writeln!(s, "inputs:");
        for (name, digest) in &prov.inputs {
            let _ = writeln!(s, "  {name:<12} {digest}");
        }
    }
    s
}
