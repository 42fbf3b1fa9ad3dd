//! Online query processing.

pub mod candidates;
pub mod decompose;
pub mod engine;
pub mod enumerate;
pub mod graph;
pub mod kpartite;
pub mod stats;

pub use candidates::{build_kpartite, join_links, node_candidates, path_candidates, PathCandidates};
pub use decompose::{decompose_query, Decomposition};
pub use engine::{
    answer_query, Engine, QueryOptions, QueryRun, Reduction, StageSizes, StageTimings, Stages,
};
pub use enumerate::{enumerate_matches, join_order};
pub use graph::{QueryGraph, QueryNode};
pub use kpartite::{joint_reduce, joint_reduce_parallel, reduce_structure, reduce_upperbounds, KPartite};
pub use stats::{query_stats, PathStats, QueryStats};
