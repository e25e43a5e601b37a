//! Stage orchestration: network, buildings, plants and demand, then sizing,
//! clustering and export. The in-memory functions are what the CLI
//! subcommands and the C API wrap.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use sha2::{Digest, Sha256};

use crate::artifactio::{export_geojson, export_graph_json, import_graph_json, render_svg, summarize, SvgStyle};
use crate::assemble::{
    assign_construction_years, assign_demand, attach_buildings, attach_plants, building_node_id, filter_by_buffer,
    sample_connections, site_buildings,
};
use crate::config::{ClusterSettings, NetworkSource, RunConfig};
use crate::demand::ProfileBank;
use crate::error::{Error, Result};
use crate::geo::{GeoPolyline, Polyline, Projection};
use crate::hydro::{nominal_mass_flow, size_edge, size_network, SizingReport};
use crate::ingest::{
    load_blocks, load_buildings, load_census, load_control_points, load_plants, load_weather, parse_kml,
    polylines_to_geojson, polylines_to_graph,
};
use crate::model::{Model, SkippedPlant};
use crate::netgraph::{NetworkGraph, Node, NodeId, NodeKind};
use crate::rasterex::{extract_network, RasterMap};
use crate::simplify::{aggregate_clusters, contract_degree2, kmeans_best_of, ClusterConfig};
use crate::synth::reference_weather;

/// File names written into the output directory.
pub mod files {
    pub const MODEL_JSON: &str = "model.json";
    pub const SIZED_JSON: &str = "model_sized.json";
    pub const CLUSTERED_JSON: &str = "model_clustered.json";
    pub const GEOJSON: &str = "model.geojson";
    pub const SVG: &str = "map.svg";
    pub const REPORT: &str = "report.txt";
    pub const EXTRACTED: &str = "extracted.geojson";
    pub const SNAPSHOT_DIR: &str = "snapshots";
}

/// Reads input files and records their SHA-256 digests.
#[derive(Debug, Default)]
struct InputLog {
    digests: BTreeMap<String, String>,
}

impl InputLog {
    fn bytes(&mut self, name: &str, path: &Path) -> Result<Vec<u8>> {
        let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.digests.insert(name.to_owned(), hex::encode(Sha256::digest(&data)));
        Ok(data)
    }

    fn text(&mut self, name: &str, path: &Path) -> Result<String> {
        String::from_utf8(self.bytes(name, path)?)
            .map_err(|_| Error::parse(name, "document", "file is not valid UTF-8"))
    }
}

fn timed<T>(stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| e.in_stage(stage));
    info!("stage {stage} finished in {:.3} s", start.elapsed().as_secs_f64());
    out
}

/// A named intermediate model.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub name: String,
    pub model: Model,
}

#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub model: Model,
    /// network, buffer, attach and simplify, in that order.
    pub snapshots: Vec<Snapshot>,
    pub bank: ProfileBank,
    /// Polylines recovered from a raster map, when that was the source.
    pub extracted: Option<Vec<GeoPolyline>>,
}

struct Network {
    graph: NetworkGraph,
    projection: Projection,
    extracted: Option<Vec<GeoPolyline>>,
    warnings: Vec<String>,
}

fn projection_for<'a>(cfg: &RunConfig, pts: impl IntoIterator<Item = &'a crate::geo::GeoPoint>) -> Result<Projection> {
    match cfg.projection_origin {
        Some(o) => Projection::new(o),
        None => Projection::centered_on(pts)
            .unwrap_or_else(|| Err(Error::Geometry("network input has no coordinates".into()))),
    }
}

fn lines_to_graph(lines: &[GeoPolyline], proj: &Projection, snap: f64) -> Result<NetworkGraph> {
    let plane = lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.project(proj)
                .map_err(|e| Error::Geometry(format!("polyline {i}: {e}")))
        })
        .collect::<Result<Vec<Polyline>>>()?;
    Ok(polylines_to_graph(&plane, snap))
}

fn load_network(cfg: &RunConfig, log: &mut InputLog) -> Result<Network> {
    let mut warnings = Vec::new();
    match &cfg.network {
        NetworkSource::Kml(path) => {
            let lines = parse_kml(&log.text("network", path)?)?;
            let proj = projection_for(cfg, lines.iter().flat_map(|l| &l.points))?;
            Ok(Network {
                graph: lines_to_graph(&lines, &proj, cfg.snap_tolerance)?,
                projection: proj,
                extracted: None,
                warnings,
            })
        }
        NetworkSource::Raster { image, control_points } => {
            let raster = RasterMap::from_png(&log.bytes("raster", image)?)?;
            let cps = load_control_points(&log.text("control_points", control_points)?)?;
            let proj = projection_for(cfg, cps.iter().map(|c| &c.geo))?;
            let ex = extract_network(&raster, &cps, &cfg.raster, &proj)?;
            if ex.polylines.is_empty() {
                warnings.push("the raster map contains no pixels of the network color".into());
            } else if ex.components > 1 {
                warnings.push(format!(
                    "the extracted network has {} disconnected pieces",
                    ex.components
                ));
            }
            Ok(Network {
                graph: lines_to_graph(&ex.polylines, &proj, cfg.snap_tolerance)?,
                projection: proj,
                extracted: Some(ex.polylines),
                warnings,
            })
        }
        NetworkSource::Graph(path) => {
            let m = import_graph_json(&log.text("network", path)?)?;
            if m.graph.nodes().any(|n| n.kind != NodeKind::Junction) {
                return Err(Error::Config(
                    "a graph_json network source must contain only junctions; size or cluster built models directly"
                        .into(),
                ));
            }
            Ok(Network {
                graph: m.graph,
                projection: m.projection,
                extracted: None,
                warnings,
            })
        }
    }
}

/// Demand profile shapes from the configured weather, or the built-in
/// reference year when no weather file is given.
pub fn profile_bank(cfg: &RunConfig) -> Result<(ProfileBank, Option<String>)> {
    let mut log = InputLog::default();
    profile_bank_logged(cfg, &mut log)
}

fn profile_bank_logged(cfg: &RunConfig, log: &mut InputLog) -> Result<(ProfileBank, Option<String>)> {
    let (weather, note) = match &cfg.weather {
        Some(p) => (load_weather(&log.text("weather", p)?)?, None),
        None => (
            reference_weather(),
            Some("no weather file given; demand profiles use the built-in reference year".to_string()),
        ),
    };
    Ok((ProfileBank::new(&weather, &cfg.slp, cfg.calendar_year)?, note))
}

fn snapshot(name: &str, model: &Model) -> Snapshot {
    Snapshot {
        name: name.into(),
        model: model.clone(),
    }
}

/// Network, buildings, plants and demand: the assembled model before sizing.
pub fn build(cfg: &RunConfig) -> Result<BuildOutcome> {
    let mut log = InputLog::default();
    let net = timed("network", || {
        let net = load_network(cfg, &mut log)?;
        if net.graph.edge_count() == 0 {
            return Err(Error::Geometry("the network has no pipes".into()));
        }
        Ok(net)
    })?;
    let proj = net.projection;
    let mut model = Model::new(net.graph, proj);
    model.provenance.seed = cfg.seed;
    model.provenance.config_hash = cfg.hash.clone();
    for w in net.warnings {
        warn!("{w}");
        model.provenance.notes.warnings.push(w);
    }
    model.provenance.notes.stages.push("network".into());
    model.provenance.inputs = log.digests.clone();
    let mut snapshots = vec![snapshot("network", &model)];

    let kept = timed("buffer", || {
        let path = cfg
            .buildings
            .as_ref()
            .ok_or_else(|| Error::Config("inputs.buildings is required".into()))?;
        let records = load_buildings(&log.text("buildings", path)?)?;
        let sited = site_buildings(&records, &proj)?;
        let kept = filter_by_buffer(&model.graph, &sited, cfg.assembly.buffer_threshold)?;
        info!(
            "{} of {} buildings within {} m of the network",
            kept.len(),
            sited.len(),
            cfg.assembly.buffer_threshold
        );
        Ok(kept)
    })?;
    model.provenance.notes.stages.push("buffer".into());
    model.provenance.inputs = log.digests.clone();
    {
        let mut view = model.clone();
        for b in &kept {
            let mut n = Node::new(building_node_id(&b.record.id), NodeKind::Building, b.centroid);
            n.attrs.source_id = Some(b.record.id.clone());
            n.attrs.usage_type = Some(b.record.usage_type);
            view.graph.add_node(n)?;
        }
        snapshots.push(snapshot("buffer", &view));
    }

    let bank = timed("attach", || {
        let blocks = match &cfg.blocks {
            Some(p) => load_blocks(&log.text("blocks", p)?)?,
            None => Vec::new(),
        };
        let sampling = sample_connections(&kept, &blocks, &proj, cfg.seed)?;
        info!("{} buildings connected", sampling.connected.len());
        let cells = match &cfg.census {
            Some(p) => load_census(&log.text("census", p)?, &cfg.year_classes)?,
            None => Vec::new(),
        };
        let mut connected = sampling.connected;
        if !connected.is_empty() {
            let years = assign_construction_years(&mut connected, &cells)?;
            info!(
                "construction years: {} recorded, {} from census, {} from neighbors",
                years.explicit, years.census, years.neighbors
            );
        }
        attach_buildings(&mut model.graph, &connected)?;

        let plants = match &cfg.plants {
            Some(p) => load_plants(&log.text("plants", p)?)?,
            None => Vec::new(),
        };
        let pa = attach_plants(&mut model.graph, &plants, &proj, cfg.assembly.plant_attach_max)?;
        let notes = &mut model.provenance.notes;
        for (id, d) in pa.skipped {
            warn!("plant {id} is {d:.1} m from the network and was not connected");
            notes.skipped_plants.push(SkippedPlant { id, distance_m: d });
        }
        notes.warnings.extend(pa.warnings);

        let (bank, note) = profile_bank_logged(cfg, &mut log)?;
        if let Some(n) = note {
            info!("{n}");
            notes.warnings.push(n);
        }
        assign_demand(&mut model.graph, &connected, &cfg.specific_demand, &bank)?;
        Ok(bank)
    })?;
    model.provenance.notes.stages.push("attach".into());
    model.provenance.inputs = log.digests.clone();
    snapshots.push(snapshot("attach", &model));

    timed("simplify", || {
        let removed = contract_degree2(&mut model.graph);
        info!("removed {removed} pass-through junctions");
        Ok(())
    })?;
    model.provenance.notes.stages.push("simplify".into());
    snapshots.push(snapshot("simplify", &model));

    Ok(BuildOutcome {
        model,
        snapshots,
        bank,
        extracted: net.extracted,
    })
}

/// Pipe sizing on the model's current graph.
pub fn size(model: &mut Model, cfg: &RunConfig) -> Result<SizingReport> {
    let rep = timed("size", || size_network(&mut model.graph, &cfg.sizing, &cfg.fluid))?;
    let notes = &mut model.provenance.notes;
    notes.flagged_edges = rep
        .flagged
        .iter()
        .map(|(u, v)| [u.to_string(), v.to_string()])
        .collect();
    if !rep.flagged.is_empty() {
        let msg = format!("{} edges need more than the largest catalog pipe", rep.flagged.len());
        warn!("{msg}");
        notes.warnings.push(msg);
    }
    notes.stages.push("size".into());
    Ok(rep)
}

/// Clusters Building nodes into Consumer nodes. On an already sized graph
/// only the new consumer service pipes are sized; main pipes keep the
/// diameters computed from individual buildings.
pub fn cluster(
    model: &mut Model,
    cfg: &RunConfig,
    settings: &ClusterSettings,
    bank: &ProfileBank,
) -> Result<Vec<NodeId>> {
    timed("cluster", || {
        let g = &mut model.graph;
        let members: Vec<NodeId> = g.nodes_of_kind(NodeKind::Building).map(|n| n.id.clone()).collect();
        if settings.k > members.len() {
            return Err(Error::Config(format!(
                "cluster.k = {} exceeds the {} buildings in the model",
                settings.k,
                members.len()
            )));
        }
        let points: Vec<_> = members.iter().map(|id| g.node(id).unwrap().pos).collect();
        let kcfg = ClusterConfig {
            k: settings.k,
            seed: cfg.seed,
            max_iter: settings.max_iter,
            tol: settings.tol,
            restarts: settings.restarts,
        };
        let assignment = kmeans_best_of(&points, &kcfg)?;
        let sized = g.edges().any(|(_, e)| e.dn.is_some());
        let consumers = aggregate_clusters(g, &members, &assignment, bank)?;
        let mut flagged = Vec::new();
        if sized {
            for c in &consumers {
                let load = g.node(c).unwrap().attrs.nominal_load.unwrap_or(0.0);
                let flow = nominal_mass_flow(load, &cfg.sizing, &cfg.fluid);
                let (j, e) = g.neighbors(c).next().map(|(j, e)| (j.clone(), e)).unwrap();
                if !size_edge(g, e, flow, &cfg.sizing, &cfg.fluid)? {
                    flagged.push([j.to_string(), c.to_string()]);
                }
            }
        }
        contract_degree2(g);
        let notes = &mut model.provenance.notes;
        // Flagged edges of removed buildings no longer exist.
        notes.flagged_edges.retain(|[u, v]| {
            model
                .graph
                .edge_between(&u.as_str().into(), &v.as_str().into())
                .is_some()
        });
        notes.flagged_edges.extend(flagged);
        notes.cluster_order = Some(if sized { "after-sizing" } else { "before-sizing" }.into());
        notes.stages.push("cluster".into());
        Ok(consumers)
    })
}

/// Every artifact of a full run, in memory.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub model: Model,
    pub snapshots: Vec<Snapshot>,
    pub extracted: Option<Vec<GeoPolyline>>,
}

/// build, size and cluster in the configured order.
pub fn run(cfg: &RunConfig) -> Result<PipelineOutcome> {
    let start = Instant::now();
    let BuildOutcome {
        mut model,
        mut snapshots,
        bank,
        extracted,
    } = build(cfg)?;
    match &cfg.cluster {
        Some(s) if s.before_sizing => {
            cluster(&mut model, cfg, s, &bank)?;
            snapshots.push(snapshot("cluster", &model));
            size(&mut model, cfg)?;
        }
        Some(s) => {
            size(&mut model, cfg)?;
            cluster(&mut model, cfg, s, &bank)?;
            snapshots.push(snapshot("cluster", &model));
        }
        None => {
            size(&mut model, cfg)?;
        }
    }
    info!("pipeline finished in {:.3} s", start.elapsed().as_secs_f64());
    Ok(PipelineOutcome {
        model,
        snapshots,
        extracted,
    })
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    info!("wrote {}", path.display());
    Ok(path.to_path_buf())
}

fn write_snapshots(dir: &Path, snaps: &[Snapshot]) -> Result<Vec<PathBuf>> {
    snaps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let p = dir
                .join(files::SNAPSHOT_DIR)
                .join(format!("{:02}-{}.json", i + 1, s.name));
            write(&p, export_graph_json(&s.model))
        })
        .collect()
}

fn read_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    import_graph_json(&text)
}

/// Raster extraction only; writes the polylines as GeoJSON.
pub fn cmd_extract(cfg: &RunConfig) -> Result<PathBuf> {
    let NetworkSource::Raster { .. } = &cfg.network else {
        return Err(Error::Config(
            "extract needs inputs.raster and inputs.control_points".into(),
        ));
    };
    let mut log = InputLog::default();
    let net = timed("extract", || load_network(cfg, &mut log))?;
    for w in &net.warnings {
        warn!("{w}");
    }
    let lines = net.extracted.unwrap_or_default();
    write(&cfg.output_dir.join(files::EXTRACTED), polylines_to_geojson(&lines))
}

pub fn cmd_build(cfg: &RunConfig, snapshots: bool) -> Result<PathBuf> {
    let out = build(cfg)?;
    if snapshots {
        write_snapshots(&cfg.output_dir, &out.snapshots)?;
    }
    write(&cfg.output_dir.join(files::MODEL_JSON), export_graph_json(&out.model))
}

pub fn cmd_size(cfg: &RunConfig, graph: &Path) -> Result<PathBuf> {
    let mut model = read_model(graph)?;
    size(&mut model, cfg)?;
    write(&cfg.output_dir.join(files::SIZED_JSON), export_graph_json(&model))
}

pub fn cmd_cluster(cfg: &RunConfig, graph: &Path) -> Result<PathBuf> {
    let settings = cfg
        .cluster
        .as_ref()
        .ok_or_else(|| Error::Config("cluster needs a [cluster] section with k".into()))?;
    let mut model = read_model(graph)?;
    let (bank, _) = profile_bank(cfg)?;
    cluster(&mut model, cfg, settings, &bank)?;
    write(&cfg.output_dir.join(files::CLUSTERED_JSON), export_graph_json(&model))
}

pub fn cmd_render(graph: &Path, out_dir: &Path) -> Result<PathBuf> {
    let model = read_model(graph)?;
    write(&out_dir.join(files::SVG), render_svg(&model, &SvgStyle::default()))
}

pub fn cmd_report(graph: &Path, out_dir: &Path) -> Result<PathBuf> {
    let model = read_model(graph)?;
    write(&out_dir.join(files::REPORT), summarize(&model))
}

/// Full run writing graph JSON, GeoJSON, SVG map and report (plus extracted
/// polylines for raster sources and stage snapshots on request).
pub fn cmd_pipeline(cfg: &RunConfig, snapshots: bool) -> Result<Vec<PathBuf>> {
    let out = run(cfg)?;
    let dir = &cfg.output_dir;
    let mut written = Vec::new();
    if let Some(lines) = &out.extracted {
        written.push(write(&dir.join(files::EXTRACTED), polylines_to_geojson(lines))?);
    }
    if snapshots {
        written.extend(write_snapshots(dir, &out.snapshots)?);
    }
    written.push(write(&dir.join(files::MODEL_JSON), export_graph_json(&out.model))?);
    written.push(write(&dir.join(files::GEOJSON), export_geojson(&out.model))?);
    written.push(write(
        &dir.join(files::SVG),
        render_svg(&out.model, &SvgStyle::default()),
    )?);
    written.push(write(&dir.join(files::REPORT), summarize(&out.model))?);
    Ok(written)
}
