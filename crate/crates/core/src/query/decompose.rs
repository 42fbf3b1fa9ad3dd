//! Query decomposition into overlapping paths of bounded length.
//!
//! Every simple query path of length at most `L` is a candidate. Its cost
//! `C(P, α)` is the estimated number of index matches divided by
//! `degree(P) · density(P)`, and a decomposition's estimated search space
//! `SS_0` is the product of its paths' costs. The cover is chosen greedily by
//! new edges per unit cost; for queries with few edges an exact search over
//! covers (each path adding at least one new edge) replaces the greedy cover
//! when it finds a cheaper one.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::index::{estimate_count, Histogram};
use crate::model::LabelId;
use crate::query::QueryGraph;

/// Largest edge count handled by the exact cover search.
pub const EXACT_COVER_MAX_EDGES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Query node sequence of each path.
    pub paths: Vec<Vec<usize>>,
    /// Query edge indices along each path.
    pub path_edges: Vec<Vec<usize>>,
    /// `C(P, α)` of each path.
    pub costs: Vec<f64>,
    /// For `p < q` sharing nodes: `(position in p, position in q)` pairs.
    pub join_predicates: BTreeMap<(usize, usize), Vec<(usize, usize)>>,
    /// Paths sharing at least one node with each path, ascending.
    pub partners: Vec<Vec<usize>>,
    /// Path responsible for each query node's label factor.
    pub node_cover: Vec<usize>,
    /// Path responsible for each query edge's existence factor.
    pub edge_cover: Vec<usize>,
}

impl Decomposition {
    /// Estimated initial search space, the product of path costs.
    pub fn ss0(&self) -> f64 {
        self.costs.iter().product()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Join predicates between `p` and `q` as `(position in p, position in q)`.
    pub fn predicates(&self, p: usize, q: usize) -> Vec<(usize, usize)> {
        if p < q {
            self.join_predicates.get(&(p, q)).cloned().unwrap_or_default()
        } else {
            self.join_predicates
                .get(&(q, p))
                .map(|v| v.iter().map(|&(a, b)| (b, a)).collect())
                .unwrap_or_default()
        }
    }

    /// Assembles a decomposition from paths in selection order.
    pub fn from_paths(q: &QueryGraph, paths: Vec<Vec<usize>>, costs: Vec<f64>) -> Result<Self> {
        let mut path_edges = Vec::with_capacity(paths.len());
        for p in &paths {
            let mut edges = Vec::with_capacity(p.len().saturating_sub(1));
            for w in p.windows(2) {
                edges.push(q.edge_index(w[0], w[1]).ok_or_else(|| {
                    Error::InvalidQuery(format!("{:?} is not a path of the query", p))
                })?);
            }
            path_edges.push(edges);
        }
        let mut node_cover = vec![usize::MAX; q.len()];
        let mut edge_cover = vec![usize::MAX; q.edges.len()];
        for (i, p) in paths.iter().enumerate() {
            for &n in p {
                if node_cover[n] == usize::MAX {
                    node_cover[n] = i;
                }
            }
            for &e in &path_edges[i] {
                if edge_cover[e] == usize::MAX {
                    edge_cover[e] = i;
                }
            }
        }
        if node_cover.contains(&usize::MAX) || edge_cover.contains(&usize::MAX) {
            return Err(Error::InvalidQuery("paths do not cover the query".into()));
        }
        let mut join_predicates = BTreeMap::new();
        let mut partners = vec![Vec::new(); paths.len()];
        for a in 0..paths.len() {
            for b in a + 1..paths.len() {
                let mut preds = Vec::new();
                for (i, n) in paths[a].iter().enumerate() {
                    if let Some(j) = paths[b].iter().position(|m| m == n) {
                        preds.push((i, j));
                    }
                }
                if !preds.is_empty() {
                    join_predicates.insert((a, b), preds);
                    partners[a].push(b);
                    partners[b].push(a);
                }
            }
        }
        for p in &mut partners {
            p.sort_unstable();
        }
        Ok(Decomposition {
            paths,
            path_edges,
            costs,
            join_predicates,
            partners,
            node_cover,
            edge_cover,
        })
    }
}

/// Simple paths of length `1..=max_len` in one orientation (first node below
/// last), or the single node of an edgeless query.
pub fn candidate_paths(q: &QueryGraph, max_len: usize) -> Vec<Vec<usize>> {
    if q.edges.is_empty() {
        return (0..q.len()).map(|n| vec![n]).collect();
    }
    let mut out = Vec::new();
    let mut path = Vec::new();
    for start in 0..q.len() {
        path.push(start);
        extend(q, max_len, &mut path, &mut out);
        path.pop();
    }
    out
}

fn extend(q: &QueryGraph, max_len: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if path.len() > 1 && path[0] < *path.last().expect("non-empty") {
        out.push(path.clone());
    }
    if path.len() > max_len {
        return;
    }
    let last = *path.last().expect("non-empty");
    for &m in q.neighbors(last) {
        if !path.contains(&m) {
            path.push(m);
            extend(q, max_len, path, out);
            path.pop();
        }
    }
}

/// `Σ degree(n) - 2 · length(P)`.
pub fn path_degree(q: &QueryGraph, path: &[usize]) -> usize {
    path.iter().map(|&n| q.degree(n)).sum::<usize>() - 2 * (path.len() - 1)
}

/// `2K / (M (M - 1))` with `K` the query edges among the path's `M` nodes;
/// 1 for a single node.
pub fn path_density(q: &QueryGraph, path: &[usize]) -> f64 {
    let m = path.len();
    if m < 2 {
        return 1.0;
    }
    let mut k = 0;
    for (i, &a) in path.iter().enumerate() {
        for &b in &path[i + 1..] {
            if q.has_edge(a, b) {
                k += 1;
            }
        }
    }
    2.0 * k as f64 / (m * (m - 1)) as f64
}

/// `C(P, α)`. A path degree of 0 is treated as 1.
pub fn path_cost(q: &QueryGraph, labels: &[LabelId], path: &[usize], h: &Histogram, alpha: f64) -> f64 {
    let seq: Vec<LabelId> = path.iter().map(|&n| labels[n]).collect();
    let estimate = estimate_count(h, &seq, alpha);
    estimate / (path_degree(q, path).max(1) as f64 * path_density(q, path))
}

fn is_path_graph(q: &QueryGraph) -> bool {
    q.edges.len() + 1 == q.len() && (0..q.len()).all(|n| q.degree(n) <= 2)
}

/// The query's own node sequence when it is a path.
fn as_single_path(q: &QueryGraph) -> Vec<usize> {
    if q.len() == 1 {
        return vec![0];
    }
    let start = (0..q.len())
        .filter(|&n| q.degree(n) == 1)
        .min()
        .expect("paths have endpoints");
    let mut path = vec![start];
    while path.len() < q.len() {
        let last = *path.last().expect("non-empty");
        let next = q
            .neighbors(last)
            .iter()
            .copied()
            .find(|m| !path.contains(m))
            .expect("connected path");
        path.push(next);
    }
    path
}

pub fn decompose_query(
    q: &QueryGraph,
    labels: &[LabelId],
    max_len: usize,
    h: &Histogram,
) -> Result<Decomposition> {
    if max_len == 0 && !q.edges.is_empty() {
        return Err(Error::PathTooLong { needed: 1, max: 0 });
    }
    let cost = |p: &[usize]| path_cost(q, labels, p, h, q.alpha);
    if is_path_graph(q) && q.len() - 1 <= max_len {
        let path = as_single_path(q);
        let c = cost(&path);
        return Decomposition::from_paths(q, vec![path], vec![c]);
    }
    if q.edges.len() > 128 {
        return Err(Error::InvalidQuery("queries are limited to 128 edges".into()));
    }
    let candidates = candidate_paths(q, max_len);
    let costs: Vec<f64> = candidates.iter().map(|p| cost(p)).collect();
    let masks: Vec<u128> = candidates
        .iter()
        .map(|p| {
            p.windows(2)
                .map(|w| 1u128 << q.edge_index(w[0], w[1]).expect("query path"))
                .fold(0, |a, b| a | b)
        })
        .collect();
    let full: u128 = if q.edges.len() == 128 { u128::MAX } else { (1u128 << q.edges.len()) - 1 };

    let mut chosen = greedy_cover(&masks, &costs, full);
    if q.edges.len() <= EXACT_COVER_MAX_EDGES {
        let exact = exact_cover(&masks, &costs, full as usize);
        let log_cost = |sel: &[usize]| sel.iter().map(|&i| costs[i].ln()).sum::<f64>();
        if log_cost(&exact) < log_cost(&chosen) - 1e-12 {
            chosen = exact;
        }
    }
    let paths = chosen.iter().map(|&i| candidates[i].clone()).collect();
    let path_costs = chosen.iter().map(|&i| costs[i]).collect();
    Decomposition::from_paths(q, paths, path_costs)
}

fn greedy_cover(masks: &[u128], costs: &[f64], full: u128) -> Vec<usize> {
    let mut covered = 0u128;
    let mut chosen = Vec::new();
    while covered != full {
        let mut best: Option<(usize, f64, u32)> = None;
        for (i, &m) in masks.iter().enumerate() {
            let new = (m & !covered).count_ones();
            if new == 0 {
                continue;
            }
            let eff = if costs[i] <= 0.0 { f64::INFINITY } else { new as f64 / costs[i] };
            let better = match best {
                None => true,
                Some((_, be, bn)) => eff > be || (eff == be && new > bn),
            };
            if better {
                best = Some((i, eff, new));
            }
        }
        let (i, _, _) = best.expect("every edge lies on some candidate path");
        covered |= masks[i];
        chosen.push(i);
    }
    chosen
}

/// Minimum `Σ ln C` over sequences of paths that each add an uncovered edge.
fn exact_cover(masks: &[u128], costs: &[f64], full: usize) -> Vec<usize> {
    let states = full + 1;
    let mut best = vec![f64::INFINITY; states];
    let mut parent: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX); states];
    best[0] = 0.0;
    let logs: Vec<f64> = costs.iter().map(|c| c.ln()).collect();
    for mask in 0..states {
        if best[mask] == f64::INFINITY {
            continue;
        }
        for (i, &m) in masks.iter().enumerate() {
            let m = m as usize;
            if m & !mask == 0 {
                continue;
            }
            let next = mask | m;
            let c = best[mask] + logs[i];
            if c < best[next] {
                best[next] = c;
                parent[next] = (mask, i);
            }
        }
    }
    let mut out = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let (prev, i) = parent[mask];
        out.push(i);
        mask = prev;
    }
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::QueryNode;

    fn query(n: usize, edges: &[(usize, usize)]) -> QueryGraph {
        let nodes = (0..n)
            .map(|i| QueryNode {
                id: format!("q{i}"),
                label: "a".into(),
            })
            .collect();
        QueryGraph::new(nodes, edges.to_vec(), 0.5).unwrap()
    }

    fn flat_histogram(max_len: usize, count: u64) -> Histogram {
        let rows = (1..=max_len + 1).map(|n| (vec![0u16; n], vec![count, count])).collect();
        Histogram {
            points: vec![0.1, 1.0],
            rows,
        }
    }

    #[test]
    fn paper_degree_and_density_example() {
        // Path 1-2-3-4 with chord 1-3, node 5 on 3 and 4, node 6 on 2.
        let q = query(6, &[(0, 1), (1, 2), (2, 3), (0, 2), (4, 2), (4, 3), (5, 1)]);
        assert_eq!(path_degree(&q, &[0, 1, 2, 3]), 5);
        assert!((path_density(&q, &[0, 1, 2, 3]) - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn short_path_query_is_one_path() {
        let q = query(3, &[(1, 0), (1, 2)]);
        let d = decompose_query(&q, &[0, 0, 0], 3, &flat_histogram(3, 10)).unwrap();
        assert_eq!(d.paths, vec![vec![0, 1, 2]]);
        assert!(d.join_predicates.is_empty());
    }

    #[test]
    fn double_length_path_splits_at_middle() {
        let q = query(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let d = decompose_query(&q, &[0; 5], 2, &flat_histogram(2, 100)).unwrap();
        assert_eq!(d.len(), 2);
        let mut paths = d.paths.clone();
        paths.sort();
        assert_eq!(paths, vec![vec![0, 1, 2], vec![2, 3, 4]]);
        assert_eq!(d.join_predicates.len(), 1);
        assert_eq!(d.join_predicates.values().next().unwrap().len(), 1);
    }

    #[test]
    fn triangle_is_covered() {
        let q = query(3, &[(0, 1), (1, 2), (0, 2)]);
        let d = decompose_query(&q, &[0; 3], 2, &flat_histogram(2, 10)).unwrap();
        let mut covered = vec![false; 3];
        for edges in &d.path_edges {
            for &e in edges {
                covered[e] = true;
            }
        }
        assert!(covered.iter().all(|&c| c));
        assert!(d.node_cover.iter().all(|&p| p < d.len()));
    }
}
