//! C interface to dhforge.
//!
//! Models are passed as opaque `DhModel` handles. Every fallible function
//! returns a `DhStatus`; on failure the message is available from
//! `dh_last_error` on the same thread. Strings returned by the library are
//! owned by the caller and must be released with `dh_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dhforge::artifactio::{
    export_geojson, export_graph_json, import_geojson, import_graph_json, render_svg, summarize, SvgStyle,
};
use dhforge::config::{Overrides, RunConfig};
use dhforge::hydro::{friction_factor, nominal_mass_flow, size_network, FluidProps, SizingConfig};
use dhforge::model::Model;
use dhforge::pipeline;
use dhforge::simplify::contract_degree2;
use dhforge::Error;

/// Result of a library call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DhStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Invalid configuration or parameter value.
    Config = 3,
    /// Malformed input text.
    Parse = 4,
    /// A file could not be read or written.
    Io = 5,
    /// The model cannot be completed, for example without a supply node.
    Infeasible = 6,
    /// Geometry or graph inconsistency.
    Graph = 7,
    /// The library panicked; this is a bug.
    Panic = 8,
}

/// Opaque handle to a heating network model.
pub struct DhModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> DhStatus {
    match err {
        Error::Stage { source, .. } => status_of(source),
        Error::Config(_) => DhStatus::Config,
        Error::Parse { .. } | Error::Json(_) => DhStatus::Parse,
        Error::Io { .. } => DhStatus::Io,
        Error::Infeasible(_) => DhStatus::Infeasible,
        Error::Geometry(_) | Error::Graph(_) => DhStatus::Graph,
    }
}

/// Runs `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), (DhStatus, String)>) -> DhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DhStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            DhStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (DhStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (DhStatus, String) {
    (DhStatus::NullArgument, format!("{name} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (DhStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (DhStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn model_ref<'a>(m: *const DhModel) -> Result<&'a DhModel, (DhStatus, String)> {
    m.as_ref().ok_or_else(|| null("model"))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), (DhStatus, String)> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_model(out: *mut *mut DhModel, model: Model) -> Result<(), (DhStatus, String)> {
    put(out, Box::into_raw(Box::new(DhModel { model })), "out")
}

unsafe fn put_string(out: *mut *mut c_char, text: String) -> Result<(), (DhStatus, String)> {
    let c = CString::new(text).map_err(|e| (DhStatus::Graph, format!("output contains a NUL byte: {e}")))?;
    put(out, c.into_raw(), "out")
}

/// Message of the last failed call on this thread, or null if there was none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn dh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dh_model_free(model: *mut DhModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Loads a model from graph JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dh_model_from_graph_json(json: *const c_char, out: *mut *mut DhModel) -> DhStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        put_model(out, import_graph_json(text).map_err(lib_err)?)
    })
}

/// Loads a model from a GeoJSON FeatureCollection written by `dh_model_to_geojson`.
///
/// # Safety
/// `geojson` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dh_model_from_geojson(geojson: *const c_char, out: *mut *mut DhModel) -> DhStatus {
    guard(|| {
        let text = read_str(geojson, "geojson")?;
        put_model(out, import_geojson(text).map_err(lib_err)?)
    })
}

/// Runs build, sizing and clustering for the config file at `config_path`
/// without writing any files.
///
/// # Safety
/// `config_path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dh_pipeline_run(config_path: *const c_char, out: *mut *mut DhModel) -> DhStatus {
    guard(|| {
        let path = read_str(config_path, "config_path")?;
        let cfg = RunConfig::load(Path::new(path), &Overrides::default()).map_err(lib_err)?;
        let outcome = pipeline::run(&cfg).map_err(lib_err)?;
        put_model(out, outcome.model)
    })
}

/// Runs the full pipeline for the config file at `config_path` and writes
/// every artifact to the configured output directory. Stage snapshots are
/// written too when `snapshots` is true.
///
/// # Safety
/// `config_path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dh_pipeline_write(config_path: *const c_char, snapshots: bool) -> DhStatus {
    guard(|| {
        let path = read_str(config_path, "config_path")?;
        let cfg = RunConfig::load(Path::new(path), &Overrides::default()).map_err(lib_err)?;
        pipeline::cmd_pipeline(&cfg, snapshots).map_err(lib_err)?;
        Ok(())
    })
}

/// Number of nodes, or 0 for a null model.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dh_model_node_count(model: *const DhModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.graph.node_count())
}

/// Number of edges, or 0 for a null model.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dh_model_edge_count(model: *const DhModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.graph.edge_count())
}

/// Sum of all edge lengths in meters.
///
/// # Safety
/// `model` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dh_model_total_length(model: *const DhModel, out: *mut f64) -> DhStatus {
    guard(|| {
        let m = model_ref(model)?;
        put(out, m.model.graph.total_length(), "out")
    })
}

/// Merges pass-through junctions into single edges. `removed` receives the
/// number of junctions removed and may be null.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dh_model_contract(model: *mut DhModel, removed: *mut usize) -> DhStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        let n = contract_degree2(&mut m.model.graph);
        if !removed.is_null() {
            removed.write(n);
        }
        Ok(())
    })
}

/// Sizes every pipe with the built-in catalog and fluid properties.
/// `delta_t` is the temperature spread in K, `r_max` the pressure-gradient
/// limit in Pa/m and `v_max` the velocity limit in m/s. `flagged` receives
/// the number of edges beyond the largest catalog pipe and may be null.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dh_model_size(
    model: *mut DhModel,
    delta_t: f64,
    r_max: f64,
    v_max: f64,
    flagged: *mut usize,
) -> DhStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        let cfg = SizingConfig {
            delta_t,
            r_max,
            v_max,
            ..SizingConfig::default()
        };
        let rep = size_network(&mut m.model.graph, &cfg, &FluidProps::default()).map_err(lib_err)?;
        if !flagged.is_null() {
            flagged.write(rep.flagged.len());
        }
        Ok(())
    })
}

/// Graph JSON document of the model.
///
/// # Safety
/// `model` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dh_model_to_graph_json(model: *const DhModel, out: *mut *mut c_char) -> DhStatus {
    guard(|| put_string(out, export_graph_json(&model_ref(model)?.model)))
}

/// GeoJSON FeatureCollection of the model.
///
/// # Safety
/// `model` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dh_model_to_geojson(model: *const DhModel, out: *mut *mut c_char) -> DhStatus {
    guard(|| put_string(out, export_geojson(&model_ref(model)?.model)))
}

/// SVG map of the model with the default style.
///
/// # Safety
/// `model` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dh_model_render_svg(model: *const DhModel, out: *mut *mut c_char) -> DhStatus {
    guard(|| put_string(out, render_svg(&model_ref(model)?.model, &SvgStyle::default())))
}

/// Plain-text summary report of the model.
///
/// # Safety
/// `model` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dh_model_report(model: *const DhModel, out: *mut *mut c_char) -> DhStatus {
    guard(|| put_string(out, summarize(&model_ref(model)?.model)))
}

/// Design mass flow in kg/s for a load of `q_kw` kW and a temperature spread
/// of `delta_t` K, using the built-in water properties.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dh_nominal_mass_flow(q_kw: f64, delta_t: f64, out: *mut f64) -> DhStatus {
    guard(|| {
        let cfg = SizingConfig {
            delta_t,
            ..SizingConfig::default()
        };
        cfg.validate().map_err(lib_err)?;
        if !q_kw.is_finite() || q_kw < 0.0 {
            return Err((
                DhStatus::Config,
                format!("load must be finite and non-negative, got {q_kw}"),
            ));
        }
        put(out, nominal_mass_flow(q_kw, &cfg, &FluidProps::default()), "out")
    })
}

/// Darcy friction factor for Reynolds number `re` and relative roughness
/// `rel_rough` (roughness divided by inner diameter).
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dh_friction_factor(re: f64, rel_rough: f64, out: *mut f64) -> DhStatus {
    guard(|| {
        if !(re.is_finite() && re > 0.0) || !(rel_rough.is_finite() && rel_rough >= 0.0) {
            return Err((
                DhStatus::Config,
                format!("need re > 0 and rel_rough >= 0, got {re} and {rel_rough}"),
            ));
        }
        put(out, friction_factor(re, rel_rough), "out")
    })
}
