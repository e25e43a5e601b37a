#ifndef DHFORGE_H
#define DHFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a library call.
 */
typedef enum {
  DH_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DH_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  DH_STATUS_INVALID_UTF8 = 2,
  /**
   * Invalid configuration or parameter value.
   */
  DH_STATUS_CONFIG = 3,
  /**
   * Malformed input text.
   */
  DH_STATUS_PARSE = 4,
  /**
   * A file could not be read or written.
   */
  DH_STATUS_IO = 5,
  /**
   * The model cannot be completed, for example without a supply node.
   */
  DH_STATUS_INFEASIBLE = 6,
  /**
   * Geometry or graph inconsistency.
   */
  DH_STATUS_GRAPH = 7,
  /**
   * The library panicked; this is a bug.
   */
  DH_STATUS_PANIC = 8,
} DhStatus;

/**
 * Opaque handle to a heating network model.
 */
typedef struct DhModel DhModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if there was none.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *dh_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dh_version(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void dh_string_free(char *s);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and must not be used afterwards.
 */
void dh_model_free(DhModel *model);

/**
 * Loads a model from graph JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
DhStatus dh_model_from_graph_json(const char *json, DhModel **out);

/**
 * Loads a model from a GeoJSON FeatureCollection written by `dh_model_to_geojson`.
 *
 * # Safety
 * `geojson` must be a NUL-terminated string and `out` a writable pointer.
 */
DhStatus dh_model_from_geojson(const char *geojson, DhModel **out);

/**
 * Runs build, sizing and clustering for the config file at `config_path`
 * without writing any files.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string and `out` a writable pointer.
 */
DhStatus dh_pipeline_run(const char *config_path, DhModel **out);

/**
 * Runs the full pipeline for the config file at `config_path` and writes
 * every artifact to the configured output directory. Stage snapshots are
 * written too when `snapshots` is true.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string.
 */
DhStatus dh_pipeline_write(const char *config_path, bool snapshots);

/**
 * Number of nodes, or 0 for a null model.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t dh_model_node_count(const DhModel *model);

/**
 * Number of edges, or 0 for a null model.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t dh_model_edge_count(const DhModel *model);

/**
 * Sum of all edge lengths in meters.
 *
 * # Safety
 * `model` must be a live handle and `out` a writable pointer.
 */
DhStatus dh_model_total_length(const DhModel *model, double *out);

/**
 * Merges pass-through junctions into single edges. `removed` receives the
 * number of junctions removed and may be null.
 *
 * # Safety
 * `model` must be a live handle.
 */
DhStatus dh_model_contract(DhModel *model, size_t *removed);

/**
 * Sizes every pipe with the built-in catalog and fluid properties.
 * `delta_t` is the temperature spread in K, `r_max` the pressure-gradient
 * limit in Pa/m and `v_max` the velocity limit in m/s. `flagged` receives
 * the number of edges beyond the largest catalog pipe and may be null.
 *
 * # Safety
 * `model` must be a live handle.
 */
DhStatus dh_model_size(DhModel *model, double delta_t, double r_max, double v_max, size_t *flagged);

/**
 * Graph JSON document of the model.
 *
 * # Safety
 * `model` must be a live handle and `out` a writable pointer.
 */
DhStatus dh_model_to_graph_json(const DhModel *model, char **out);

/**
 * GeoJSON FeatureCollection of the model.
 *
 * # Safety
 * `model` must be a live handle and `out` a writable pointer.
 */
DhStatus dh_model_to_geojson(const DhModel *model, char **out);

/**
 * SVG map of the model with the default style.
 *
 * # Safety
 * `model` must be a live handle and `out` a writable pointer.
 */
DhStatus dh_model_render_svg(const DhModel *model, char **out);

/**
 * Plain-text summary report of the model.
 *
 * # Safety
 * `model` must be a live handle and `out` a writable pointer.
 */
DhStatus dh_model_report(const DhModel *model, char **out);

/**
 * Design mass flow in kg/s for a load of `q_kw` kW and a temperature spread
 * of `delta_t` K, using the built-in water properties.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
DhStatus dh_nominal_mass_flow(double q_kw, double delta_t, double *out);

/**
 * Darcy friction factor for Reynolds number `re` and relative roughness
 * `rel_rough` (roughness divided by inner diameter).
 *
 * # Safety
 * `out` must be a writable pointer.
 */
DhStatus dh_friction_factor(double re, double rel_rough, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DHFORGE_H */
