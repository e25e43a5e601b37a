//! Run configuration: a TOML file plus command-line overrides.
//!
//! Relative paths are resolved against the directory holding the config file.
//! See the README for the full key reference.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assemble::AssemblyConfig;
use crate::demand::{default_slp_table, default_specific_demand, SlpParams, SlpTable, SpecificDemand};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::hydro::{default_catalog, FluidProps, SizingConfig};
use crate::ingest::{default_year_classes, load_catalog, read_file, UsageType, YearClasses, DEFAULT_SNAP_TOL_M};
use crate::rasterex::{ExtractOptions, DEFAULT_COLOR_TOLERANCE, MAX_DILATION};

/// Calendar year used for weekday placement when none is configured.
pub const DEFAULT_CALENDAR_YEAR: i32 = 2023;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    /// `[lon, lat]`
    projection_origin: Option<[f64; 2]>,
    calendar_year: Option<i32>,
    inputs: RawInputs,
    network: RawNetwork,
    raster: RawRaster,
    assembly: RawAssembly,
    sizing: RawSizing,
    fluid: Option<FluidProps>,
    cluster: Option<RawCluster>,
    demand: RawDemand,
    year_classes: BTreeMap<String, i32>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawInputs {
    network_kml: Option<PathBuf>,
    raster: Option<PathBuf>,
    control_points: Option<PathBuf>,
    graph_json: Option<PathBuf>,
    buildings: Option<PathBuf>,
    blocks: Option<PathBuf>,
    plants: Option<PathBuf>,
    census: Option<PathBuf>,
    weather: Option<PathBuf>,
    catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawNetwork {
    snap_tolerance_m: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawRaster {
    rgb: Option<[u8; 3]>,
    tolerance: Option<u8>,
    dilation: Option<u8>,
    simplify_px: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawAssembly {
    buffer_threshold_m: Option<f64>,
    plant_attach_max_m: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSizing {
    delta_t_k: Option<f64>,
    r_max_pa_per_m: Option<f64>,
    v_max_m_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCluster {
    k: usize,
    #[serde(default)]
    enabled: Option<bool>,
    #[serde(default)]
    max_iter: Option<usize>,
    #[serde(default)]
    tol_m: Option<f64>,
    #[serde(default)]
    restarts: Option<usize>,
    /// "after-sizing" (default) or "before-sizing"
    #[serde(default)]
    order: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawDemand {
    specific_kwh_per_m2a: BTreeMap<UsageType, f64>,
    slp: BTreeMap<UsageType, SlpParams>,
}

/// Where the main network geometry comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkSource {
    Kml(PathBuf),
    Raster {
        image: PathBuf,
        control_points: PathBuf,
    },
    /// A previously exported graph document.
    Graph(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSettings {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
    pub before_sizing: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub projection_origin: Option<GeoPoint>,
    pub calendar_year: i32,
    pub network: NetworkSource,
    pub snap_tolerance: f64,
    pub buildings: Option<PathBuf>,
    pub blocks: Option<PathBuf>,
    pub plants: Option<PathBuf>,
    pub census: Option<PathBuf>,
    pub weather: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub raster: ExtractOptions,
    pub assembly: AssemblyConfig,
    pub sizing: SizingConfig,
    pub fluid: FluidProps,
    pub cluster: Option<ClusterSettings>,
    pub specific_demand: SpecificDemand,
    pub slp: SlpTable,
    pub year_classes: YearClasses,
    /// SHA-256 of the effective settings, independent of file locations.
    pub hash: String,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub no_cluster: bool,
    pub cluster_before_sizing: bool,
}

impl RunConfig {
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self> {
        let text = read_file(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base, ov)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path, ov: &Overrides) -> Result<Self> {
        let mut raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        if let Some(s) = ov.seed {
            raw.seed = Some(s);
        }
        if let Some(c) = raw.cluster.as_mut() {
            if ov.cluster_before_sizing {
                c.order = Some("before-sizing".into());
            }
            if ov.no_cluster {
                c.enabled = Some(false);
            }
        }
        let hash = {
            let mut hashed = raw.clone();
            hashed.output_dir = None;
            let canon = serde_json::to_vec(&hashed).expect("serializable");
            hex::encode(Sha256::digest(&canon))
        };
        let at = |p: &Option<PathBuf>| p.as_ref().map(|p| base.join(p));
        let seed = raw
            .seed
            .ok_or_else(|| Error::Config("a seed is required (config `seed` or --seed)".into()))?;
        let output_dir = ov
            .output_dir
            .clone()
            .or_else(|| at(&raw.output_dir))
            .unwrap_or_else(|| base.join("out"));

        let inp = &raw.inputs;
        let network = match (&inp.network_kml, &inp.raster, &inp.graph_json) {
            (Some(k), None, None) => NetworkSource::Kml(base.join(k)),
            (None, Some(r), None) => NetworkSource::Raster {
                image: base.join(r),
                control_points: at(&inp.control_points)
                    .ok_or_else(|| Error::Config("raster input needs inputs.control_points".into()))?,
            },
            (None, None, Some(g)) => NetworkSource::Graph(base.join(g)),
            _ => {
                return Err(Error::Config(
                    "exactly one of inputs.network_kml, inputs.raster, inputs.graph_json is required".into(),
                ))
            }
        };
        if inp.control_points.is_some() && !matches!(network, NetworkSource::Raster { .. }) {
            return Err(Error::Config(
                "inputs.control_points only applies to a raster network".into(),
            ));
        }

        let projection_origin = raw
            .projection_origin
            .map(|[lon, lat]| GeoPoint::new(lon, lat))
            .transpose()?;

        let snap_tolerance = raw.network.snap_tolerance_m.unwrap_or(DEFAULT_SNAP_TOL_M);
        if !(snap_tolerance >= 0.0 && snap_tolerance.is_finite()) {
            return Err(Error::Config("network.snap_tolerance_m must be non-negative".into()));
        }

        let mut raster = ExtractOptions::new(raw.raster.rgb.unwrap_or([0, 0, 255]));
        raster.tolerance = raw.raster.tolerance.unwrap_or(DEFAULT_COLOR_TOLERANCE);
        raster.dilation = raw.raster.dilation.unwrap_or(0);
        if raster.dilation > MAX_DILATION {
            return Err(Error::Config(format!("raster.dilation must be at most {MAX_DILATION}")));
        }
        if let Some(s) = raw.raster.simplify_px {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config("raster.simplify_px must be non-negative".into()));
            }
            raster.simplify_px = s;
        }

        let mut assembly = AssemblyConfig::new(seed);
        if let Some(v) = raw.assembly.buffer_threshold_m {
            assembly.buffer_threshold = v;
        }
        if let Some(v) = raw.assembly.plant_attach_max_m {
            assembly.plant_attach_max = v;
        }
        assembly.validate()?;

        let catalog = match at(&inp.catalog) {
            Some(p) => load_catalog(&read_file(&p)?)?,
            None => default_catalog(),
        };
        let mut sizing = SizingConfig {
            catalog,
            ..Default::default()
        };
        if let Some(v) = raw.sizing.delta_t_k {
            sizing.delta_t = v;
        }
        if let Some(v) = raw.sizing.r_max_pa_per_m {
            sizing.r_max = v;
        }
        if let Some(v) = raw.sizing.v_max_m_s {
            sizing.v_max = v;
        }
        sizing.validate()?;
        let fluid = raw.fluid.unwrap_or_default();
        fluid.validate()?;

        let cluster = match &raw.cluster {
            Some(c) if c.enabled != Some(false) => {
                let before_sizing = match c.order.as_deref() {
                    None | Some("after-sizing") => false,
                    Some("before-sizing") => true,
                    Some(o) => {
                        return Err(Error::Config(format!(
                            "cluster.order must be \"after-sizing\" or \"before-sizing\", got {o:?}"
                        )))
                    }
                };
                let s = ClusterSettings {
                    k: c.k,
                    max_iter: c.max_iter.unwrap_or(100),
                    tol: c.tol_m.unwrap_or(1e-3),
                    restarts: c.restarts.unwrap_or(1),
                    before_sizing,
                };
                if s.k == 0 || s.max_iter == 0 || s.restarts == 0 || !(s.tol >= 0.0) {
                    return Err(Error::Config(
                        "cluster.k, max_iter and restarts must be positive".into(),
                    ));
                }
                Some(s)
            }
            _ => None,
        };

        let mut specific_demand = default_specific_demand();
        for (u, v) in &raw.demand.specific_kwh_per_m2a {
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("specific demand for {u} must be non-negative")));
            }
            specific_demand.insert(*u, *v);
        }
        let mut slp = default_slp_table();
        for (u, p) in &raw.demand.slp {
            p.validate()?;
            slp.insert(*u, p.clone());
        }
        let mut year_classes = default_year_classes();
        year_classes.extend(raw.year_classes.iter().map(|(k, v)| (k.clone(), *v)));

        Ok(RunConfig {
            seed,
            output_dir,
            projection_origin,
            calendar_year: raw.calendar_year.unwrap_or(DEFAULT_CALENDAR_YEAR),
            network,
            snap_tolerance,
            buildings: at(&inp.buildings),
            blocks: at(&inp.blocks),
            plants: at(&inp.plants),
            census: at(&inp.census),
            weather: at(&inp.weather),
            catalog: at(&inp.catalog),
            raster,
            assembly,
            sizing,
            fluid,
            cluster,
            specific_demand,
            slp,
            year_classes,
            hash,
        })
    }
}
