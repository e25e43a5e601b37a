//! Synthetic cities for demos, tests and benchmarks: a small hand-laid toy
//! city with known counts, a scalable grid city, a reference weather year and
//! a polyline rasterizer for map-extraction round trips.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::demand::{WeatherSeries, DAYS_PER_YEAR, HOURS_PER_YEAR};
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, GeoPolygon, GeoPolyline, PlanePoint, Projection};
use crate::ingest::{
    blocks_to_geojson, buildings_to_geojson, plants_to_geojson, polylines_to_kml, BlockRecord, BuildingRecord,
    CensusCell, PlantRecord, UsageType,
};
use crate::rasterex::{ControlPoint, RasterMap};

/// Plane origin of the synthetic cities.
pub const SYNTH_ORIGIN: GeoPoint = GeoPoint { lon: 6.95, lat: 51.52 };

/// Everything a pipeline run needs, in memory.
#[derive(Debug, Clone)]
pub struct CityInputs {
    pub origin: GeoPoint,
    pub network: Vec<GeoPolyline>,
    pub buildings: Vec<BuildingRecord>,
    pub blocks: Vec<BlockRecord>,
    pub plants: Vec<PlantRecord>,
    pub census: Vec<CensusCell>,
    pub weather: WeatherSeries,
}

/// Smooth annual cycle with a daily swing, coldest in mid January.
pub fn reference_weather() -> WeatherSeries {
    let temps = (0..HOURS_PER_YEAR)
        .map(|h| {
            let day = (h / 24) as f64;
            let hour = (h % 24) as f64;
            let seasonal = 9.0 - 11.0 * (2.0 * std::f64::consts::PI * (day - 15.0) / DAYS_PER_YEAR as f64).cos();
            let daily = -3.0 * (2.0 * std::f64::consts::PI * (hour - 3.0) / 24.0).cos();
            ((seasonal + daily) * 100.0).round() / 100.0
        })
        .collect();
    WeatherSeries::new(temps).expect("reference weather is valid")
}

fn rect(proj: &Projection, cx: f64, cy: f64, w: f64, h: f64) -> GeoPolygon {
    let c = |dx: f64, dy: f64| proj.unproject(PlanePoint::new(cx + dx, cy + dy));
    let (a, b) = (w / 2.0, h / 2.0);
    GeoPolygon {
        exterior: vec![c(-a, -b), c(a, -b), c(a, b), c(-a, b), c(-a, -b)],
        holes: vec![],
    }
}

fn line(proj: &Projection, pts: &[(f64, f64)]) -> GeoPolyline {
    GeoPolyline {
        points: pts
            .iter()
            .map(|&(x, y)| proj.unproject(PlanePoint::new(x, y)))
            .collect(),
    }
}

/// Street grid polylines with a vertex every `step` meters.
fn street_grid(proj: &Projection, xs: &[f64], ys: &[f64], step: f64) -> Vec<GeoPolyline> {
    let span = |a: f64, b: f64| -> Vec<f64> {
        let n = ((b - a) / step).round() as usize;
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    };
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let (y0, y1) = (ys[0], ys[ys.len() - 1]);
    let mut out = Vec::new();
    for &y in ys {
        out.push(line(
            proj,
            &span(x0, x1).into_iter().map(|x| (x, y)).collect::<Vec<_>>(),
        ));
    }
    for &x in xs {
        out.push(line(
            proj,
            &span(y0, y1).into_iter().map(|y| (x, y)).collect::<Vec<_>>(),
        ));
    }
    out
}

/// Known counts of [`toy_city`].
pub mod toy {
    /// Building records in the input.
    pub const BUILDINGS: usize = 84;
    /// Buildings within 100 m of the network.
    pub const WITHIN_BUFFER: usize = 80;
    /// Connected buildings after block sampling.
    pub const CONNECTED: usize = 56;
    /// Plants in the input, of which one is too far from the network.
    pub const PLANTS: usize = 3;
    pub const PLANTS_ATTACHED: usize = 2;
    /// Blocks, 3 by 2 cells of 200 m.
    pub const BLOCKS: usize = 6;
}

/// A 600 m by 400 m street grid with six blocks of 13 buildings each, two
/// buildings 60 m south of the network and four 160 m south (outside the
/// 100 m buffer). Block proportions 0.5, 0.75, none, 1.0, 0.25 and 0.6
/// select 7, 10, 13, 13, 3 and 8 buildings. Three plants, one of them 300 m
/// from the network.
pub fn toy_city() -> CityInputs {
    let proj = Projection::new(SYNTH_ORIGIN).expect("valid origin");
    let network = street_grid(&proj, &[0.0, 200.0, 400.0, 600.0], &[0.0, 200.0, 400.0], 100.0);

    let mut sites: Vec<(f64, f64, Option<String>)> = Vec::new();
    let proportions = [Some(0.5), Some(0.75), None, Some(1.0), Some(0.25), Some(0.6)];
    let mut blocks = Vec::new();
    for (bi, p) in proportions.iter().enumerate() {
        let (bx, by) = ((bi % 3) as f64 * 200.0, (bi / 3) as f64 * 200.0);
        let id = format!("blk{bi}");
        for t in [50.0, 100.0, 150.0] {
            sites.push((bx + t, by + 30.0, None));
            sites.push((bx + t, by + 170.0, None));
            sites.push((bx + 30.0, by + t, None));
            sites.push((bx + 170.0, by + t, None));
        }
        sites.push((bx + 100.0, by + 90.0, None));
        blocks.push(BlockRecord {
            block_id: id,
            polygon: vec![rect(&proj, bx + 100.0, by + 100.0, 200.0, 200.0)],
            connection_proportion: *p,
        });
    }
    for x in [150.0, 450.0] {
        sites.push((x, -60.0, None));
    }
    for x in [100.0, 250.0, 400.0, 550.0] {
        sites.push((x, -160.0, None));
    }

    let usages = [
        UsageType::Residential,
        UsageType::Residential,
        UsageType::Residential,
        UsageType::Office,
        UsageType::Commercial,
        UsageType::Residential,
        UsageType::Industrial,
        UsageType::Other,
    ];
    let buildings = sites
        .iter()
        .enumerate()
        .map(|(i, &(x, y, _))| BuildingRecord {
            id: format!("b{i:03}"),
            footprint: vec![rect(&proj, x, y, 14.0, 10.0)],
            usage_type: usages[i % usages.len()],
            floor_area: Some(140.0 * (2 + i % 3) as f64),
            annual_demand: (i % 4 == 0).then_some(15_000.0 + 1_000.0 * (i % 5) as f64),
            block_id: None,
            construction_year: (i % 6 == 0).then(|| 1950 + i as i32),
        })
        .collect();

    // Census covers the western half of the city.
    let mut census = Vec::new();
    for gx in 0..3 {
        for gy in 0..4 {
            census.push(CensusCell {
                grid_x: gx,
                grid_y: gy,
                construction_year: 1934 + 10 * ((gx + gy) % 5) as i32,
            });
        }
    }

    let plant = |id: &str, name: &str, x: f64, y: f64, cap: f64| PlantRecord {
        id: id.into(),
        pos: proj.unproject(PlanePoint::new(x, y)),
        name: name.into(),
        capacity_kw: Some(cap),
        plant_type: Some("chp".into()),
    };
    let plants = vec![
        plant("p1", "west plant", -25.0, 200.0, 8_000.0),
        plant("p2", "east plant", 630.0, 400.0, 4_000.0),
        plant("p3", "remote plant", 300.0, 700.0, 2_000.0),
    ];

    CityInputs {
        origin: SYNTH_ORIGIN,
        network,
        buildings,
        blocks,
        plants,
        census,
        weather: reference_weather(),
    }
}

/// A square grid city of `n_buildings` buildings on 100 m blocks, twelve per
/// block at 20 m from the street, all connected (no block data). Usage,
/// floor area and recorded years are drawn from a seeded generator. Four
/// plants sit just off the grid corners.
pub fn grid_city(n_buildings: usize, seed: u64) -> CityInputs {
    let proj = Projection::new(SYNTH_ORIGIN).expect("valid origin");
    let blocks_needed = n_buildings.div_ceil(12).max(1);
    let side = (blocks_needed as f64).sqrt().ceil() as usize;
    let extent = side as f64 * 100.0;
    let coords: Vec<f64> = (0..=side).map(|i| i as f64 * 100.0).collect();
    let network = street_grid(&proj, &coords, &coords, 100.0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut buildings = Vec::with_capacity(n_buildings);
    'outer: for b in 0..side * side {
        let (bx, by) = ((b % side) as f64 * 100.0, (b / side) as f64 * 100.0);
        for t in [25.0, 50.0, 75.0] {
            for (x, y) in [
                (bx + t, by + 20.0),
                (bx + t, by + 80.0),
                (bx + 20.0, by + t),
                (bx + 80.0, by + t),
            ] {
                if buildings.len() == n_buildings {
                    break 'outer;
                }
                let i = buildings.len();
                let r = unit();
                let usage = match (r * 10.0) as usize {
                    0..=5 => UsageType::Residential,
                    6 => UsageType::Office,
                    7 => UsageType::Commercial,
                    8 => UsageType::Industrial,
                    _ => UsageType::Other,
                };
                let floor_area = (80.0 + 320.0 * unit()).round();
                let year = (unit() < 0.7).then(|| 1900 + (unit() * 115.0) as i32);
                buildings.push(BuildingRecord {
                    id: format!("b{i:05}"),
                    footprint: vec![rect(&proj, x, y, 10.0, 8.0)],
                    usage_type: usage,
                    floor_area: Some(floor_area),
                    annual_demand: None,
                    block_id: None,
                    construction_year: year,
                });
            }
        }
    }

    let plants = [
        (-15.0, -15.0),
        (extent + 15.0, -15.0),
        (-15.0, extent + 15.0),
        (extent + 15.0, extent + 15.0),
    ]
    .iter()
    .enumerate()
    .map(|(i, &(x, y))| PlantRecord {
        id: format!("p{}", i + 1),
        pos: proj.unproject(PlanePoint::new(x, y)),
        name: format!("plant {}", i + 1),
        capacity_kw: None,
        plant_type: None,
    })
    .collect();

    CityInputs {
        origin: SYNTH_ORIGIN,
        network,
        buildings,
        blocks: Vec::new(),
        plants,
        census: Vec::new(),
        weather: reference_weather(),
    }
}

/// Draws plane polylines into a white raster of `width`x`height` pixels at
/// `pixel_m` meters per pixel, with pixel (0, 0) centered on `top_left` and
/// rows running south. Lines are `thickness` pixels wide. Returns the raster
/// and three control points at the raster corners.
pub fn rasterize(
    lines: &[Vec<PlanePoint>],
    proj: &Projection,
    top_left: PlanePoint,
    pixel_m: f64,
    size: (usize, usize),
    rgb: [u8; 3],
    thickness: f64,
) -> Result<(RasterMap, Vec<ControlPoint>)> {
    let (width, height) = size;
    let mut raster = RasterMap::filled(width, height, [255, 255, 255])?;
    let half = thickness / 2.0;
    for l in lines {
        for w in l.windows(2) {
            // pixel-space segment
            let to_px = |p: PlanePoint| ((p.x - top_left.x) / pixel_m, (top_left.y - p.y) / pixel_m);
            let (a, b) = (to_px(w[0]), to_px(w[1]));
            let (c0, c1) = (a.0.min(b.0) - half - 1.0, a.0.max(b.0) + half + 1.0);
            let (r0, r1) = (a.1.min(b.1) - half - 1.0, a.1.max(b.1) + half + 1.0);
            for r in (r0.floor().max(0.0) as usize)..=(r1.ceil().min(height as f64 - 1.0).max(0.0) as usize) {
                for c in (c0.floor().max(0.0) as usize)..=(c1.ceil().min(width as f64 - 1.0).max(0.0) as usize) {
                    let p = PlanePoint::new(c as f64, r as f64);
                    let (pa, pb) = (PlanePoint::new(a.0, a.1), PlanePoint::new(b.0, b.1));
                    let d = crate::geo::point_segment_distance(p, pa, pb).map_or(p.dist(&pa), |(d, _)| d);
                    if d <= half {
                        raster.set(c, r, rgb);
                    }
                }
            }
        }
    }
    let cp = |c: f64, r: f64| ControlPoint {
        col: c,
        row: r,
        geo: proj.unproject(PlanePoint::new(top_left.x + c * pixel_m, top_left.y - r * pixel_m)),
    };
    let (wm, hm) = ((width - 1) as f64, (height - 1) as f64);
    Ok((raster, vec![cp(0.0, 0.0), cp(wm, 0.0), cp(0.0, hm)]))
}

pub fn census_to_csv(cells: &[CensusCell]) -> String {
    let mut s = String::from("grid_x,grid_y,construction_year\n");
    for c in cells {
        let _ = writeln!(s, "{},{},{}", c.grid_x, c.grid_y, c.construction_year);
    }
    s
}

pub fn weather_to_csv(w: &WeatherSeries) -> String {
    let mut s = String::from("hour,ambient_temp_c\n");
    for (h, t) in w.temps().iter().enumerate() {
        let _ = writeln!(s, "{h},{t}");
    }
    s
}

pub fn control_points_to_csv(points: &[ControlPoint]) -> String {
    let mut s = String::from("col,row,lon,lat\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", p.col, p.row, p.geo.lon, p.geo.lat);
    }
    s
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the city as input files plus a `dhforge.toml` into `dir` and
/// returns the config path. `cluster_k` adds a `[cluster]` section.
pub fn write_inputs(city: &CityInputs, dir: &Path, seed: u64, cluster_k: Option<usize>) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("network.kml"), polylines_to_kml(&city.network))?;
    write(&dir.join("buildings.geojson"), buildings_to_geojson(&city.buildings))?;
    write(&dir.join("plants.geojson"), plants_to_geojson(&city.plants))?;
    write(&dir.join("weather.csv"), weather_to_csv(&city.weather))?;
    let mut cfg = format!(
        "seed = {seed}\noutput_dir = \"out\"\nprojection_origin = [{}, {}]\n\n[inputs]\nnetwork_kml = \"network.kml\"\nbuildings = \"buildings.geojson\"\nplants = \"plants.geojson\"\nweather = \"weather.csv\"\n",
        city.origin.lon, city.origin.lat
    );
    if !city.blocks.is_empty() {
        write(&dir.join("blocks.geojson"), blocks_to_geojson(&city.blocks))?;
        cfg.push_str("blocks = \"blocks.geojson\"\n");
    }
    if !city.census.is_empty() {
        write(&dir.join("census.csv"), census_to_csv(&city.census))?;
        cfg.push_str("census = \"census.csv\"\n");
    }
    cfg.push_str("\n[assembly]\nbuffer_threshold_m = 100.0\nplant_attach_max_m = 200.0\n");
    cfg.push_str("\n[sizing]\ndelta_t_k = 30.0\nr_max_pa_per_m = 250.0\nv_max_m_s = 3.0\n");
    if let Some(k) = cluster_k {
        let _ = write!(cfg, "\n[cluster]\nk = {k}\nrestarts = 1\n");
    }
    let path = dir.join("dhforge.toml");
    write(&path, cfg)?;
    Ok(path)
}
