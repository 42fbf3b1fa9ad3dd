//! Direct traversal for thresholds below the index build threshold.

use super::build::{extend_path, LabelAdjacency};
use super::path::PathRecord;
use crate::model::{EntityGraph, LabelId, NodeId};

/// All simple, reference-disjoint paths labeled `seq` (in that orientation)
/// with probability at least `alpha`.
pub fn on_demand_paths(g: &EntityGraph, seq: &[LabelId], alpha: f64) -> Vec<PathRecord> {
    let mut out = Vec::new();
    if seq.is_empty() || seq.iter().any(|&l| l as usize >= g.num_labels()) {
        return out;
    }
    let adj = LabelAdjacency::new(g);
    let mut path = Vec::with_capacity(seq.len());
    for v in 0..g.num_nodes() as NodeId {
        let le = g.label_prob(v, seq[0]);
        let n = g.existence(v);
        if le > 0.0 && le * n >= alpha {
            path.push(v);
            walk(g, &adj, seq, alpha, &mut path, le, n, &mut out);
            path.pop();
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn walk(
    g: &EntityGraph,
    adj: &LabelAdjacency,
    seq: &[LabelId],
    alpha: f64,
    path: &mut Vec<NodeId>,
    pr_le: f64,
    pr_n: f64,
    out: &mut Vec<PathRecord>,
) {
    let depth = path.len();
    if depth == seq.len() {
        out.push(PathRecord {
            nodes: path.clone(),
            pr_le,
            pr_n,
        });
        return;
    }
    let last = path[depth - 1];
    for &(w, e) in adj.get(last, seq[depth]) {
        if let Some((le, n)) = extend_path(g, path, pr_le, pr_n, seq[depth - 1], w, e, seq[depth], alpha) {
            path.push(w);
            walk(g, adj, seq, alpha, path, le, n, out);
            path.pop();
        }
    }
}
