//! Synthetic path annotations for map images.
//!
//! The pipeline turns a map into ground-truth paths:
//!
//! 1. [`synthmap`] renders a procedural map with an exact corridor mask.
//! 2. [`segment`] clusters the map's colors and binarizes each cluster.
//! 3. [`critic`] judges candidate masks; accepted ones are merged.
//! 4. [`graph`] quantizes the mask into a weighted block graph.
//! 5. [`paths`] samples endpoints, routes with Dijkstra and simplifies.
//! 6. [`critic`] judges each path; [`dataset`] persists the survivors.
//!
//! [`metrics`] scores predicted paths with NDTW and success rate, and
//! [`baseline`] solves queries from color segmentation alone.
//!
//! Data-parallel loops run through [`Exec`]; with the default `parallel`
//! feature they use rayon, and results are identical either way.

pub mod baseline;
pub mod config;
pub mod critic;
pub mod dataset;
pub mod exec;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod paths;
pub mod raster;
pub mod render;
pub mod segment;
pub mod synthmap;

pub use config::{default_config, ConfigOverrides, PipelineConfig};
pub use exec::Exec;
pub use model::{
    validate_path, Coordinate, MapCategory, PathAnnotation, PathQuery, PathValidity, RasterMap, TraversabilityMask,
};
