//! Probabilistic model: PGD documents, the entity graph, match
//! probabilities and the brute-force possible-worlds oracle.

pub mod entity;
pub mod fixtures;
pub mod matching;
pub mod merge;
pub mod pgd;
pub mod worlds;

pub use entity::{
    build_entity_graph, Config, EdgeExistence, EntityEdge, EntityGraph, EntityNode,
    IdentityComponent, LabelId, NodeId, COMPONENT_CAP,
};
pub use matching::{
    match_probability, match_probability_labeled, sort_matches, sort_named_matches, Match, NamedMatch,
};
pub use pgd::{
    EdgeDoc, MergeFn, MergeSpec, Pgd, ReferenceDoc, SetDoc, ValidationReport, Violation,
    ViolationKind,
};
pub use worlds::{
    enumerate_possible_worlds, for_each_possible_world, oracle_subgraph_match,
    oracle_subgraph_match_exhaustive, PossibleWorld, WORLD_CAP,
};

/// Checks a PGD and reports every violation found.
pub fn validate_pgd(pgd: &Pgd) -> ValidationReport {
    pgd.validate()
}
