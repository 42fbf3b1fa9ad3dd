//! Match probabilities: `Pr(M) = Pr_le(M) * Pr_n(M)`.

use serde::{Deserialize, Serialize};

use super::entity::{EntityGraph, LabelId, NodeId};
use crate::error::{Error, Result};
use crate::prob::chain_product;
use crate::query::QueryGraph;

/// A match of a query in the entity graph. `mapping[n]` is the entity that
/// query node `n` maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Match {
    pub mapping: Vec<NodeId>,
    pub pr_le: f64,
    pub pr_n: f64,
    pub probability: f64,
    /// False when the mapping is not injective or two matched entities share
    /// a reference; such matches have probability 0.
    pub valid: bool,
}

impl Match {
    pub fn named(&self, g: &EntityGraph) -> NamedMatch {
        NamedMatch {
            mapping: self.mapping.iter().map(|&v| g.node(v).id.clone()).collect(),
            pr_le: self.pr_le,
            pr_n: self.pr_n,
            probability: self.probability,
        }
    }
}

/// A match identified by entity ids rather than graph-internal node numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMatch {
    pub mapping: Vec<String>,
    pub pr_le: f64,
    pub pr_n: f64,
    pub probability: f64,
}

/// Sorts by probability descending, then by mapping.
pub fn sort_matches(matches: &mut [Match]) {
    matches.sort_by(|a, b| {
        b.probability
            .total_cmp(&a.probability)
            .then_with(|| a.mapping.cmp(&b.mapping))
    });
}

pub fn sort_named_matches(matches: &mut [NamedMatch]) {
    matches.sort_by(|a, b| {
        b.probability
            .total_cmp(&a.probability)
            .then_with(|| a.mapping.cmp(&b.mapping))
    });
}

/// Computes the probability of mapping `q` onto `mapping`.
pub fn match_probability(g: &EntityGraph, q: &QueryGraph, mapping: &[NodeId]) -> Result<Match> {
    if mapping.len() != q.len() {
        return Err(Error::InvalidQuery(format!(
            "mapping covers {} nodes, query has {}",
            mapping.len(),
            q.len()
        )));
    }
    if let Some(&v) = mapping.iter().find(|&&v| v as usize >= g.num_nodes()) {
        return Err(Error::UnknownEntity(v.to_string()));
    }
    let labels = match q.label_ids(g) {
        Some(l) => l,
        None => {
            return Ok(Match {
                mapping: mapping.to_vec(),
                pr_le: 0.0,
                pr_n: g.node_existence_marginal(mapping),
                probability: 0.0,
                valid: refs_pairwise_disjoint(g, mapping),
            })
        }
    };
    Ok(match_probability_labeled(g, q, &labels, mapping))
}

/// [`match_probability`] with query labels already resolved.
pub fn match_probability_labeled(
    g: &EntityGraph,
    q: &QueryGraph,
    labels: &[LabelId],
    mapping: &[NodeId],
) -> Match {
    let valid = refs_pairwise_disjoint(g, mapping);
    let node_factors = mapping
        .iter()
        .zip(labels)
        .map(|(&v, &l)| g.label_prob(v, l));
    let edge_factors = q
        .edges
        .iter()
        .map(|&(a, b)| g.edge_prob(mapping[a], mapping[b], labels[a], labels[b]));
    let pr_le = chain_product(node_factors.chain(edge_factors));
    let pr_n = if valid {
        g.node_existence_marginal(mapping)
    } else {
        0.0
    };
    Match {
        mapping: mapping.to_vec(),
        pr_le,
        pr_n,
        probability: pr_le * pr_n,
        valid,
    }
}

fn refs_pairwise_disjoint(g: &EntityGraph, nodes: &[NodeId]) -> bool {
    nodes
        .iter()
        .enumerate()
        .all(|(i, &u)| nodes[i + 1..].iter().all(|&v| g.refs_disjoint(u, v)))
}
