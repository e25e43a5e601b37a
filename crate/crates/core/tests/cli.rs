//! End-to-end runs of the command-line tool.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dhforge::geo::{PlanePoint, Projection};
use dhforge::synth::{self, SYNTH_ORIGIN};

fn dhforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dhforge"))
        .args(args)
        .env("DHFORGE_LOG", "warn")
        .output()
        .expect("run dhforge")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `dhforge synth` into `dir`; returns the config path.
fn synth_toy(dir: &Path, extra: &[&str]) -> PathBuf {
    let mut args = vec!["synth", "--seed", "42", "--out", s(dir)];
    args.extend_from_slice(extra);
    let o = dhforge(&args);
    assert!(o.status.success(), "synth failed: {}", stderr(&o));
    let printed = String::from_utf8(o.stdout).unwrap();
    let path = PathBuf::from(printed.trim());
    assert!(path.ends_with("dhforge.toml"));
    path
}

/// Count on a `  kind   N` line of a report.
fn count(report: &str, kind: &str) -> usize {
    report
        .lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some(kind)).then(|| it.next()?.parse().ok()).flatten()
        })
        .unwrap_or_else(|| panic!("no {kind} line in report:\n{report}"))
}

fn pipeline(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["pipeline", "--config", s(config), "--out", s(out)];
    args.extend_from_slice(extra);
    dhforge(&args)
}

#[test]
fn pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_toy(dir.path(), &[]);
    let out = dir.path().join("out");
    let o = pipeline(&cfg, &out, &["--snapshots"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["model.json", "model.geojson", "map.svg", "report.txt"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let snaps: Vec<_> = fs::read_dir(out.join("snapshots"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(snaps.len(), 4, "{snaps:?}");
    let printed = String::from_utf8_lossy(&o.stdout);
    assert_eq!(printed.lines().count(), 8);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(count(&report, "plant"), 2);
    assert!(stderr(&o).contains("p3"), "skipped plant not reported: {}", stderr(&o));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_toy(dir.path(), &["--cluster-k", "12"]);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(pipeline(&cfg, &a, &[]).status.success());
    assert!(pipeline(&cfg, &b, &[]).status.success());
    for f in ["model.json", "model.geojson", "map.svg", "report.txt"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let c = dir.path().join("c");
    assert!(pipeline(&cfg, &c, &["--seed", "43"]).status.success());
    assert_ne!(
        fs::read(a.join("model.json")).unwrap(),
        fs::read(c.join("model.json")).unwrap()
    );
}

#[test]
fn stages_can_run_one_by_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_toy(dir.path(), &["--cluster-k", "8"]);
    let out = dir.path().join("steps");
    let run = |args: &[&str]| {
        let mut full = args.to_vec();
        full.extend_from_slice(&["--config", s(&cfg), "--out", s(&out)]);
        let o = dhforge(&full);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        PathBuf::from(String::from_utf8(o.stdout).unwrap().trim())
    };
    let built = run(&["build"]);
    let sized = run(&["size", s(&built)]);
    let clustered = run(&["cluster", s(&sized)]);
    run(&["render", s(&clustered)]);
    let report = fs::read_to_string(run(&["report", s(&clustered)])).unwrap();
    assert_eq!(count(&report, "consumer"), 8);
    assert!(report.contains("clustering: after-sizing"), "{report}");
}

#[test]
fn no_cluster_flag_skips_clustering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_toy(dir.path(), &["--cluster-k", "10"]);
    let (with, without) = (dir.path().join("with"), dir.path().join("without"));
    assert!(pipeline(&cfg, &with, &[]).status.success());
    assert!(pipeline(&cfg, &without, &["--no-cluster"]).status.success());
    let r1 = fs::read_to_string(with.join("report.txt")).unwrap();
    let r2 = fs::read_to_string(without.join("report.txt")).unwrap();
    assert_eq!(count(&r1, "consumer"), 10);
    assert_eq!((count(&r2, "consumer"), count(&r2, "building")), (0, 56));
}

#[test]
fn cluster_before_sizing_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_toy(dir.path(), &["--cluster-k", "10"]);
    let out = dir.path().join("out");
    assert!(pipeline(&cfg, &out, &["--cluster-before-sizing"]).status.success());
    let r = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(r.contains("clustering: before-sizing"), "{r}");
}

#[test]
fn too_many_clusters_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_toy(dir.path(), &["--cluster-k", "1000"]);
    let o = pipeline(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cluster.k = 1000"), "{}", stderr(&o));
}

#[test]
fn missing_plants_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_toy(dir.path(), &[]);
    fs::write(
        dir.path().join("plants.geojson"),
        r#"{"type": "FeatureCollection", "features": []}"#,
    )
    .unwrap();
    let o = pipeline(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("no supply node"), "{err}");
    assert!(err.contains("no heating plants given"), "{err}");
}

#[test]
fn seed_is_required() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_toy(dir.path(), &[]);
    let text = fs::read_to_string(&cfg).unwrap().replace("seed = 42\n", "");
    fs::write(&cfg, text).unwrap();
    let o = pipeline(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(pipeline(&cfg, &dir.path().join("out"), &["--seed", "5"])
        .status
        .success());
}

#[test]
fn malformed_input_names_its_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_toy(dir.path(), &[]);
    fs::write(dir.path().join("network.kml"), "<kml><Placemark>").unwrap();
    let o = pipeline(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stage network"), "{}", stderr(&o));
}

fn raster_config(dir: &Path, color: [u8; 3], control_points: bool) -> PathBuf {
    let proj = Projection::new(SYNTH_ORIGIN).unwrap();
    let lines = vec![vec![PlanePoint::new(20.0, -150.0), PlanePoint::new(480.0, -150.0)]];
    let (raster, cps) = synth::rasterize(&lines, &proj, PlanePoint::new(0.0, 0.0), 10.0, (50, 30), color, 3.0).unwrap();
    fs::write(dir.join("map.png"), raster.to_png().unwrap()).unwrap();
    if control_points {
        fs::write(dir.join("cps.csv"), synth::control_points_to_csv(&cps)).unwrap();
    }
    let cfg = dir.join("raster.toml");
    fs::write(
        &cfg,
        "seed = 1\noutput_dir = \"out\"\n\n[inputs]\nraster = \"map.png\"\ncontrol_points = \"cps.csv\"\n\n[raster]\nrgb = [0, 0, 255]\n",
    )
    .unwrap();
    cfg
}

#[test]
fn extract_writes_polylines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = raster_config(dir.path(), [0, 0, 255], true);
    let o = dhforge(&["extract", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/extracted.geojson")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["features"].as_array().unwrap().len(), 1);
}

#[test]
fn extract_without_network_color_warns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = raster_config(dir.path(), [255, 0, 0], true);
    let o = dhforge(&["extract", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("no pixels of the network color"), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/extracted.geojson")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(doc["features"].as_array().unwrap().is_empty());
}

#[test]
fn missing_control_points_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = raster_config(dir.path(), [0, 0, 255], false);
    let o = dhforge(&["extract", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cps.csv"), "{}", stderr(&o));
}

#[test]
fn commands_need_a_config() {
    let o = dhforge(&["pipeline"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config"));
}
