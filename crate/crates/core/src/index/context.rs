//! Per-(node, label) neighborhood summaries used for pruning.
//!
//! For node `v` and label `σ`, `N(v, σ)` holds the neighbors that share no
//! reference with `v` and have `σ` in their support. The table stores its
//! size `c`, the largest edge probability into it (`ppu`) and the largest
//! product of neighbor label probability and edge probability (`fpu`).
//! For label-conditioned edges the edge probability is the maximum over the
//! possible labels of `v`.

use crate::model::{EntityGraph, LabelId, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub struct ContextTable {
    pub num_labels: usize,
    pub count: Vec<u32>,
    pub ppu: Vec<f64>,
    pub fpu: Vec<f64>,
}

impl ContextTable {
    fn at(&self, v: NodeId, l: LabelId) -> usize {
        v as usize * self.num_labels + l as usize
    }

    pub fn num_nodes(&self) -> usize {
        if self.num_labels == 0 {
            0
        } else {
            self.count.len() / self.num_labels
        }
    }

    pub fn c(&self, v: NodeId, l: LabelId) -> u32 {
        self.count[self.at(v, l)]
    }

    pub fn ppu(&self, v: NodeId, l: LabelId) -> f64 {
        self.ppu[self.at(v, l)]
    }

    pub fn fpu(&self, v: NodeId, l: LabelId) -> f64 {
        self.fpu[self.at(v, l)]
    }
}

/// Upper bound on `Pr((v, w).e = T)` over the labels `v` may take, with `w`
/// labeled `lw`.
pub(crate) fn edge_upper_bound(g: &EntityGraph, v: NodeId, edge: u32, lw: LabelId) -> f64 {
    let e = &g.edges[edge as usize];
    g.node(v)
        .possible_labels()
        .map(|lv| g.edge_entry(e, v, lv, lw))
        .fold(0.0, f64::max)
}

pub fn compute_context(g: &EntityGraph) -> ContextTable {
    let nl = g.num_labels();
    let n = g.num_nodes();
    let mut table = ContextTable {
        num_labels: nl,
        count: vec![0; n * nl],
        ppu: vec![0.0; n * nl],
        fpu: vec![0.0; n * nl],
    };
    for v in 0..n as NodeId {
        for &(w, e) in g.neighbors(v) {
            if !g.refs_disjoint(v, w) {
                continue;
            }
            for l in g.node(w).possible_labels() {
                let p = edge_upper_bound(g, v, e, l);
                let i = table.at(v, l);
                table.count[i] += 1;
                table.ppu[i] = table.ppu[i].max(p);
                table.fpu[i] = table.fpu[i].max(g.label_prob(w, l) * p);
            }
        }
    }
    table
}
