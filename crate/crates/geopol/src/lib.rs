//! Shapefile-backed geospatial policy evaluation.
//!
//! The crate turns ESRI shapefile datasets into a feature store of WKT
//! geometries with PROV provenance, persisted as sorted N-Triples. On top
//! of the store it evaluates spatial relations (`within`, distance
//! thresholds), classifies locations against class expressions, and decides
//! whether policy provisions apply to a request, producing a decision
//! document with a step-by-step trace.
//!
//! Start with the runnable programs under `examples/`, one per capability.

pub mod cli;
pub mod geometry;
pub mod pipeline;
pub mod policy;
pub mod relations;
pub mod shapefile;
pub mod store;

#[cfg(test)]
pub(crate) mod testutil;
