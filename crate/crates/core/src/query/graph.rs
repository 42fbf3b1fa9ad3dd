//! Query graphs: small, connected, undirected, node-labeled patterns.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EntityGraph, LabelId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryNode {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct QueryDoc {
    nodes: Vec<QueryNode>,
    edges: Vec<(String, String)>,
    alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryGraph {
    pub nodes: Vec<QueryNode>,
    /// Edges as node index pairs with `a < b`, in input order.
    pub edges: Vec<(usize, usize)>,
    pub alpha: f64,
    adjacency: Vec<Vec<usize>>,
}

impl QueryGraph {
    /// Builds and checks a query: non-empty, simple, connected, `0 < alpha <= 1`.
    pub fn new(nodes: Vec<QueryNode>, edges: Vec<(usize, usize)>, alpha: f64) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidQuery("query has no nodes".into()));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidQuery(format!("alpha {alpha} is outside (0, 1]")));
        }
        let mut ids = HashSet::new();
        for n in &nodes {
            if !ids.insert(n.id.as_str()) {
                return Err(Error::InvalidQuery(format!("node `{}` declared twice", n.id)));
            }
        }
        let mut seen = HashSet::new();
        let mut canonical = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (a, b) in edges {
            if a >= nodes.len() || b >= nodes.len() {
                return Err(Error::InvalidQuery(format!("edge ({a},{b}) out of range")));
            }
            if a == b {
                return Err(Error::InvalidQuery(format!("self loop on `{}`", nodes[a].id)));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::InvalidQuery(format!(
                    "edge {}-{} declared twice",
                    nodes[a].id, nodes[b].id
                )));
            }
            canonical.push(e);
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let q = QueryGraph {
            nodes,
            edges: canonical,
            alpha,
            adjacency,
        };
        if !q.is_connected() {
            return Err(Error::InvalidQuery("query graph is not connected".into()));
        }
        Ok(q)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: QueryDoc = serde_json::from_str(text)?;
        let index: HashMap<&str, usize> = doc
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let mut edges = Vec::with_capacity(doc.edges.len());
        for (a, b) in &doc.edges {
            let lookup = |id: &String| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::InvalidQuery(format!("edge references unknown node `{id}`")))
            };
            edges.push((lookup(a)?, lookup(b)?));
        }
        Self::new(doc.nodes, edges, doc.alpha)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = QueryDoc {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b)| (self.nodes[a].id.clone(), self.nodes[b].id.clone()))
                .collect(),
            alpha: self.alpha,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.nodes.clone(), self.edges.clone(), alpha)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn neighbors(&self, n: usize) -> &[usize] {
        &self.adjacency[n]
    }

    pub fn degree(&self, n: usize) -> usize {
        self.adjacency[n].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Index of the edge `{a, b}` in [`QueryGraph::edges`].
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let e = (a.min(b), a.max(b));
        self.edges.iter().position(|&x| x == e)
    }

    /// Label ids of every node in `g`'s alphabet, or `None` if some query
    /// label is not part of it.
    pub fn label_ids(&self, g: &EntityGraph) -> Option<Vec<LabelId>> {
        self.nodes.iter().map(|n| g.label_id(&n.label)).collect()
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for &m in &self.adjacency[n] {
                if !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}
