//! Generation of graph-based district heating network models from open data:
//! network geometry (KML or raster maps), building footprints, heating plants,
//! census years and weather, through demand profiles, pipe sizing and
//! spatial aggregation to exportable model artifacts.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifactio;
pub mod assemble;
pub mod config;
pub mod demand;
pub mod error;
pub mod geo;
pub mod hydro;
pub mod ingest;
pub mod model;
pub mod netgraph;
pub mod pipeline;
pub mod rasterex;
pub mod simplify;
pub mod synth;

pub use error::{Error, Result};
