//! Structural summaries of a decomposed query used during pruning.

use crate::model::LabelId;
use crate::query::{Decomposition, QueryGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct PathStats {
    /// Query nodes outside the path adjacent to some path node, ascending.
    pub neighbors: Vec<usize>,
    /// For each entry of `neighbors`, the path positions adjacent to it.
    pub attachments: Vec<Vec<usize>>,
    /// Query edges between path nodes that are not path edges, as position
    /// pairs with the lower query node first.
    pub cycles: Vec<(usize, usize)>,
    pub degree: usize,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryStats {
    pub num_labels: usize,
    /// `c(n, σ)`: neighbors of query node `n` labeled `σ`, row-major.
    pub counts: Vec<u32>,
    pub paths: Vec<PathStats>,
}

impl QueryStats {
    pub fn c(&self, n: usize, l: LabelId) -> u32 {
        self.counts[n * self.num_labels + l as usize]
    }
}

pub fn query_stats(q: &QueryGraph, labels: &[LabelId], num_labels: usize, d: &Decomposition) -> QueryStats {
    let mut counts = vec![0u32; q.len() * num_labels];
    for n in 0..q.len() {
        for &m in q.neighbors(n) {
            counts[n * num_labels + labels[m] as usize] += 1;
        }
    }
    let paths = d
        .paths
        .iter()
        .zip(&d.path_edges)
        .map(|(path, edges)| {
            let mut neighbors = Vec::new();
            let mut attachments: Vec<Vec<usize>> = Vec::new();
            for (pos, &n) in path.iter().enumerate() {
                for &m in q.neighbors(n) {
                    if path.contains(&m) {
                        continue;
                    }
                    match neighbors.binary_search(&m) {
                        Ok(i) => attachments[i].push(pos),
                        Err(i) => {
                            neighbors.insert(i, m);
                            attachments.insert(i, vec![pos]);
                        }
                    }
                }
            }
            let mut cycles = Vec::new();
            for (i, &a) in path.iter().enumerate() {
                for (j, &b) in path.iter().enumerate() {
                    if a < b {
                        if let Some(e) = q.edge_index(a, b) {
                            if !edges.contains(&e) {
                                cycles.push((i, j));
                            }
                        }
                    }
                }
            }
            PathStats {
                neighbors,
                attachments,
                cycles,
                degree: super::decompose::path_degree(q, path),
                density: super::decompose::path_density(q, path),
            }
        })
        .collect();
    QueryStats {
        num_labels,
        counts,
        paths,
    }
}
