//! Join ordering and depth-first enumeration of full matches over the
//! reduced k-partite graph.

use crate::model::{match_probability_labeled, sort_matches, EntityGraph, LabelId, Match, NodeId};
use crate::query::{Decomposition, KPartite, QueryGraph};
use crate::index::PathRecord;

/// Path order for enumeration: cheapest path first, then repeatedly the
/// path overlapping most query nodes already placed, breaking ties by join
/// predicate count, cost and index.
pub fn join_order(d: &Decomposition) -> Vec<usize> {
    let k = d.len();
    if k == 0 {
        return Vec::new();
    }
    let first = (0..k)
        .min_by(|&a, &b| d.costs[a].total_cmp(&d.costs[b]).then(a.cmp(&b)))
        .expect("non-empty");
    let mut order = vec![first];
    let mut placed_nodes: Vec<usize> = d.paths[first].clone();
    while order.len() < k {
        let next = (0..k)
            .filter(|p| !order.contains(p))
            .map(|p| {
                let overlap = d.paths[p].iter().filter(|n| placed_nodes.contains(n)).count();
                let preds: usize = order.iter().map(|&o| d.predicates(o, p).len()).sum();
                (p, overlap, preds)
            })
            .max_by(|a, b| {
                a.1.cmp(&b.1)
                    .then(a.2.cmp(&b.2))
                    .then(d.costs[b.0].total_cmp(&d.costs[a.0]))
                    .then(b.0.cmp(&a.0))
            })
            .expect("paths remain")
            .0;
        order.push(next);
        placed_nodes.extend(d.paths[next].iter().copied());
    }
    order
}

struct Enumerator<'a> {
    g: &'a EntityGraph,
    q: &'a QueryGraph,
    labels: &'a [LabelId],
    d: &'a Decomposition,
    kp: &'a KPartite,
    cands: &'a [Vec<PathRecord>],
    order: &'a [usize],
    prune_alpha: f64,
    mapping: Vec<Option<NodeId>>,
    chosen: Vec<u32>,
    out: Vec<Match>,
}

impl Enumerator<'_> {
    fn run(&mut self, depth: usize, acc_w1: f64) {
        if depth == self.order.len() {
            self.finish();
            return;
        }
        let p = self.order[depth];
        let placed: Vec<(usize, u32)> = self.order[..depth]
            .iter()
            .zip(&self.chosen)
            .filter(|(o, _)| self.d.partners[p].binary_search(o).is_ok())
            .map(|(&o, &v)| (o, v))
            .collect();
        let candidates: Vec<u32> = if placed.is_empty() {
            (0..self.kp.w1[p].len() as u32)
                .filter(|&v| self.kp.alive[p][v as usize])
                .collect()
        } else {
            // Iterate the shortest link list, test the rest by lookup.
            let lists: Vec<&[u32]> = placed
                .iter()
                .map(|&(o, v)| {
                    let j = self.kp.partners[o].binary_search(&p).expect("partners");
                    self.kp.links[o][v as usize][j].as_slice()
                })
                .collect();
            let (si, shortest) = lists
                .iter()
                .enumerate()
                .min_by_key(|(_, l)| l.len())
                .expect("non-empty");
            shortest
                .iter()
                .copied()
                .filter(|&u| {
                    self.kp.alive[p][u as usize]
                        && lists
                            .iter()
                            .enumerate()
                            .all(|(i, l)| i == si || l.binary_search(&u).is_ok())
                })
                .collect()
        };
        let path = &self.d.paths[p];
        for u in candidates {
            let rec = &self.cands[p][u as usize];
            let mut assigned = Vec::new();
            let mut ok = true;
            for (&n, &v) in path.iter().zip(&rec.nodes) {
                match self.mapping[n] {
                    Some(w) if w == v => {}
                    Some(_) => {
                        ok = false;
                        break;
                    }
                    None => {
                        let clash = self
                            .mapping
                            .iter()
                            .flatten()
                            .any(|&w| !self.g.refs_disjoint(w, v));
                        if clash {
                            ok = false;
                            break;
                        }
                        self.mapping[n] = Some(v);
                        assigned.push(n);
                    }
                }
            }
            if ok {
                let w1 = acc_w1 * self.kp.w1[p][u as usize];
                self.chosen.push(u);
                if self.bound(depth + 1, w1) >= self.prune_alpha {
                    self.run(depth + 1, w1);
                }
                self.chosen.pop();
            }
            for n in assigned {
                self.mapping[n] = None;
            }
        }
    }

    /// Upper bound on any completion of the first `placed` paths.
    fn bound(&self, placed: usize, acc_w1: f64) -> f64 {
        let unplaced = &self.order[placed..];
        let mut rest = f64::INFINITY;
        let mut w2 = f64::INFINITY;
        for (&p, &v) in self.order[..placed].iter().zip(&self.chosen) {
            let pi = &self.kp.perception[p][v as usize];
            rest = rest.min(unplaced.iter().map(|&x| pi[x]).product());
            w2 = w2.min(self.kp.w2[p][v as usize]);
        }
        acc_w1 * rest * w2
    }

    fn finish(&mut self) {
        let mapping: Vec<NodeId> = self
            .mapping
            .iter()
            .map(|m| m.expect("all query nodes covered"))
            .collect();
        let m = match_probability_labeled(self.g, self.q, self.labels, &mapping);
        if m.valid && m.probability >= self.q.alpha {
            self.out.push(m);
        }
    }
}

/// All matches with probability at least the query threshold. `prune_alpha`
/// is the threshold used for intermediate bounds.
#[allow(clippy::too_many_arguments)]
pub fn enumerate_matches(
    g: &EntityGraph,
    q: &QueryGraph,
    labels: &[LabelId],
    d: &Decomposition,
    kp: &KPartite,
    cands: &[Vec<PathRecord>],
    order: &[usize],
    prune_alpha: f64,
) -> Vec<Match> {
    let mut e = Enumerator {
        g,
        q,
        labels,
        d,
        kp,
        cands,
        order,
        prune_alpha,
        mapping: vec![None; q.len()],
        chosen: Vec::with_capacity(order.len()),
        out: Vec::new(),
    };
    if !order.is_empty() {
        e.run(0, 1.0);
    }
    let mut out = e.out;
    sort_matches(&mut out);
    out.dedup_by(|a, b| a.mapping == b.mapping);
    out
}
