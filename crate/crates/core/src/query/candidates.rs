//! Candidate generation: node candidates from context tables, path
//! candidates from index lookups, and links between candidates of paths
//! that share query nodes.
//!
//! Every filter here compares an upper bound on the probability of any match
//! extending the candidate with the threshold, so no answer is lost.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::Result;
use crate::index::{index_lookup, ContextTable, PathIndex, PathRecord};
use crate::model::{EntityGraph, LabelId, NodeId};
use crate::query::{Decomposition, KPartite, PathStats, QueryStats};

/// `cn(n)` for every query node, as a membership vector over entities.
pub fn node_candidates(
    g: &EntityGraph,
    ctx: &ContextTable,
    labels: &[LabelId],
    stats: &QueryStats,
    alpha: f64,
) -> Vec<Vec<bool>> {
    let nl = g.num_labels() as LabelId;
    (0..labels.len())
        .into_par_iter()
        .map(|n| {
            let required: Vec<(LabelId, u32)> = (0..nl)
                .map(|s| (s, stats.c(n, s)))
                .filter(|&(_, c)| c > 0)
                .collect();
            (0..g.num_nodes() as NodeId)
                .map(|v| {
                    let p = g.label_prob(v, labels[n]);
                    p > 0.0
                        && p >= alpha
                        && required.iter().all(|&(s, c)| {
                            ctx.c(v, s) >= c && p * ctx.fpu(v, s).powi(c as i32) >= alpha
                        })
                })
                .collect()
        })
        .collect()
}

/// Index matches of a path before and after context pruning.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCandidates {
    pub raw: usize,
    pub records: Vec<PathRecord>,
}

/// Upper bound contributed by the query neighbors of the path and by the
/// query edges closing cycles over it.
pub fn context_factor(
    g: &EntityGraph,
    ctx: &ContextTable,
    labels: &[LabelId],
    path: &[usize],
    stats: &PathStats,
    nodes: &[NodeId],
) -> f64 {
    let mut pu = 1.0;
    for (&m, attach) in stats.neighbors.iter().zip(&stats.attachments) {
        let lm = labels[m];
        let mut best = f64::INFINITY;
        for &i in attach {
            let mut f = ctx.fpu(nodes[i], lm);
            for &j in attach {
                if j != i {
                    f *= ctx.ppu(nodes[j], lm);
                }
            }
            best = best.min(f);
        }
        pu *= best;
    }
    let mut cpr = 1.0;
    for &(i, j) in &stats.cycles {
        cpr *= g.edge_prob(nodes[i], nodes[j], labels[path[i]], labels[path[j]]);
    }
    pu * cpr
}

#[allow(clippy::too_many_arguments)]
pub fn path_candidates(
    g: &EntityGraph,
    idx: &PathIndex,
    ctx: &ContextTable,
    labels: &[LabelId],
    path: &[usize],
    stats: &PathStats,
    cn: &[Vec<bool>],
    lookup_alpha: f64,
    alpha: f64,
) -> Result<PathCandidates> {
    let seq: Vec<LabelId> = path.iter().map(|&n| labels[n]).collect();
    let found = index_lookup(idx, g, &seq, lookup_alpha)?;
    let raw = found.len();
    let records = found
        .into_iter()
        .filter(|r| {
            r.nodes
                .iter()
                .zip(path)
                .all(|(&v, &n)| cn[n][v as usize])
                && r.probability() * context_factor(g, ctx, labels, path, stats, &r.nodes) >= alpha
        })
        .collect();
    Ok(PathCandidates { raw, records })
}

/// Precomputed join of two partner paths.
struct PairJoin {
    /// Positions in `p` and `q` of shared query nodes, by query node.
    shared: Vec<(usize, usize)>,
    /// Positions in `q` of query nodes absent from `p`.
    q_only: Vec<usize>,
    /// Query edges of `q`'s path as position pairs, excluding those on `p`.
    q_edges: Vec<(usize, usize)>,
}

fn pair_join(d: &Decomposition, a: usize, b: usize) -> PairJoin {
    let mut shared = d.predicates(a, b);
    shared.sort_by_key(|&(i, _)| d.paths[a][i]);
    let q_only = (0..d.paths[b].len())
        .filter(|&j| !shared.iter().any(|&(_, y)| y == j))
        .collect();
    let q_edges = d.path_edges[b]
        .iter()
        .enumerate()
        .filter(|(_, e)| !d.path_edges[a].contains(e))
        .map(|(j, _)| (j, j + 1))
        .collect();
    PairJoin { shared, q_only, q_edges }
}

/// Links between candidates of every pair of partner paths, as
/// `(p, v, q, u)` with `p < q`.
///
/// Two candidates are linked when they agree on shared query nodes, map
/// distinct query nodes to distinct entities with disjoint references, and
/// the probability of their union reaches `alpha`.
pub fn join_links(
    g: &EntityGraph,
    labels: &[LabelId],
    d: &Decomposition,
    cands: &[Vec<PathRecord>],
    alpha: f64,
) -> Vec<(usize, u32, usize, u32)> {
    let mut out = Vec::new();
    for a in 0..d.len() {
        for &b in d.partners[a].iter().filter(|&&b| b > a) {
            let join = pair_join(d, a, b);
            let mut table: HashMap<Vec<NodeId>, Vec<u32>> = HashMap::new();
            for (u, r) in cands[b].iter().enumerate() {
                let key = join.shared.iter().map(|&(_, j)| r.nodes[j]).collect();
                table.entry(key).or_default().push(u as u32);
            }
            let pb = &d.paths[b];
            let links: Vec<(usize, u32, usize, u32)> = cands[a]
                .par_iter()
                .enumerate()
                .flat_map_iter(|(v, ra)| {
                    let key: Vec<NodeId> = join.shared.iter().map(|&(i, _)| ra.nodes[i]).collect();
                    let hits = table.get(&key).map_or(&[][..], Vec::as_slice);
                    let join = &join;
                    hits.iter().filter_map(move |&u| {
                        let rb = &cands[b][u as usize];
                        let mut union: Vec<NodeId> = ra.nodes.clone();
                        for &j in &join.q_only {
                            let w = rb.nodes[j];
                            if union.iter().any(|&x| !g.refs_disjoint(x, w)) {
                                return None;
                            }
                            union.push(w);
                        }
                        let mut le = ra.pr_le;
                        for &j in &join.q_only {
                            le *= g.label_prob(rb.nodes[j], labels[pb[j]]);
                        }
                        for &(i, j) in &join.q_edges {
                            le *= g.edge_prob(rb.nodes[i], rb.nodes[j], labels[pb[i]], labels[pb[j]]);
                        }
                        if le < alpha {
                            return None;
                        }
                        let n = g.node_existence_marginal(&union);
                        (le * n >= alpha).then_some((a, v as u32, b, u))
                    })
                })
                .collect();
            out.extend(links);
        }
    }
    out
}

/// Builds the candidate k-partite graph with `w1` holding each path's share
/// of label and edge factors and `w2` its node-existence probability.
pub fn build_kpartite(
    g: &EntityGraph,
    labels: &[LabelId],
    d: &Decomposition,
    cands: &[Vec<PathRecord>],
    links: Vec<(usize, u32, usize, u32)>,
) -> KPartite {
    let w1 = (0..d.len())
        .map(|p| {
            let path = &d.paths[p];
            cands[p]
                .iter()
                .map(|r| {
                    let mut w = 1.0;
                    for (i, &n) in path.iter().enumerate() {
                        if d.node_cover[n] == p {
                            w *= g.label_prob(r.nodes[i], labels[n]);
                        }
                    }
                    for (i, &e) in d.path_edges[p].iter().enumerate() {
                        if d.edge_cover[e] == p {
                            let (a, b) = (path[i], path[i + 1]);
                            w *= g.edge_prob(r.nodes[i], r.nodes[i + 1], labels[a], labels[b]);
                        }
                    }
                    w
                })
                .collect()
        })
        .collect();
    let w2 = cands.iter().map(|c| c.iter().map(|r| r.pr_n).collect()).collect();
    KPartite::new(d.partners.clone(), w1, w2, links)
}
