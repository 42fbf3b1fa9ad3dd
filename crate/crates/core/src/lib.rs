//! Threshold subgraph pattern matching over probabilistic graphs with
//! attribute, edge-existence and identity uncertainty.
//!
//! The pipeline has an offline half (build the entity graph, context tables,
//! path index and histograms) and an online half (decompose a query into
//! paths, fetch and prune candidates, reduce the candidate k-partite graph,
//! enumerate matches).

pub mod datagen;
pub mod error;
pub mod index;
pub mod model;
pub mod prob;
pub mod query;
pub mod storage;

pub use error::{Error, Result};
