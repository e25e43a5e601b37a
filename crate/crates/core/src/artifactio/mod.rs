//! Model export: graph JSON document, GeoJSON, SVG map and text report.

mod document;
mod geojson;
mod report;
mod svg;

pub use self::document::{export_graph_json, import_graph_json, same_graph, SCHEMA_VERSION};
pub use self::geojson::{export_geojson, import_geojson};
pub use self::report::summarize;
pub use self::svg::{render_svg, stroke_width, SvgStyle};

/// Coordinates are written with 1e-10 degree resolution (about 10 µm) so that
/// export, import and re-export produce identical bytes.
pub(crate) fn round_deg(v: f64) -> f64 {
    (v * 1e10).round() / 1e10
}
