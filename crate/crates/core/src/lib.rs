//! Origin-destination mobility flows from geotagged traces and travel records.
//!
//! The crate is organised as a pipeline:
//!
//! - [`geo`]: great-circle distances, airport-basin tessellation and point
//!   assignment to basins or polygon regions.
//! - [`ingest`]: CSV parsers for traces, air itineraries, commuting records
//!   and populations, with row-level diagnostics.
//! - [`flows`]: sparse flow matrices, trace/itinerary/commute flow builders,
//!   distance filtering and threshold calibration.
//! - [`models`]: the log-linear gravity law and the stacked hybrid model
//!   `H = A·G + B·F`.
//! - [`eval`]: metrics (Pearson, r², CPC) and the cross-validation harnesses.
//! - [`cli`]: the config-driven command-line pipeline.

pub mod cli;
pub mod eval;
pub mod flows;
pub mod geo;
pub mod ingest;
pub mod models;
mod node;

pub use node::{NodeId, NodePair};
