//! Candidate k-partite graph and its mutual reduction.
//!
//! One partition per query path. A vertex is a candidate match of that path
//! with weights `w1` (the label and edge factors the path is responsible
//! for) and `w2` (its node-existence probability). Links join compatible
//! candidates of paths sharing query nodes.
//!
//! Each vertex keeps a perception vector: for every partition, an upper
//! bound on the `w1` of that partition's vertex in any full match through
//! this vertex. Both reductions only ever delete vertices or lower bounds,
//! so the reduced graph is the greatest fixpoint of a monotone operator and
//! does not depend on the order in which vertices are examined.

use std::collections::VecDeque;

use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct KPartite {
    /// Partner partitions of each partition, ascending.
    pub partners: Vec<Vec<usize>>,
    pub w1: Vec<Vec<f64>>,
    pub w2: Vec<Vec<f64>>,
    pub alive: Vec<Vec<bool>>,
    /// `perception[p][v][x]`.
    pub perception: Vec<Vec<Vec<f64>>>,
    /// `links[p][v][j]`: sorted vertices of partition `partners[p][j]`.
    pub links: Vec<Vec<Vec<Vec<u32>>>>,
}

impl KPartite {
    /// Builds the graph from weights and symmetric links given as
    /// `(p, v, q, u)` tuples.
    pub fn new(
        partners: Vec<Vec<usize>>,
        w1: Vec<Vec<f64>>,
        w2: Vec<Vec<f64>>,
        link_list: impl IntoIterator<Item = (usize, u32, usize, u32)>,
    ) -> Self {
        let k = partners.len();
        let mut links: Vec<Vec<Vec<Vec<u32>>>> = (0..k)
            .map(|p| vec![vec![Vec::new(); partners[p].len()]; w1[p].len()])
            .collect();
        for (p, v, q, u) in link_list {
            let j = partners[p].binary_search(&q).expect("linked partitions are partners");
            links[p][v as usize][j].push(u);
            let i = partners[q].binary_search(&p).expect("partner relation is symmetric");
            links[q][u as usize][i].push(v);
        }
        for part in &mut links {
            for vertex in part {
                for l in vertex {
                    l.sort_unstable();
                    l.dedup();
                }
            }
        }
        let perception = (0..k)
            .map(|p| {
                w1[p]
                    .iter()
                    .map(|&w| {
                        let mut vec = vec![1.0; k];
                        vec[p] = w;
                        vec
                    })
                    .collect()
            })
            .collect();
        let alive = w1.iter().map(|ws| vec![true; ws.len()]).collect();
        KPartite {
            partners,
            w1,
            w2,
            alive,
            perception,
            links,
        }
    }

    pub fn num_partitions(&self) -> usize {
        self.partners.len()
    }

    pub fn alive_count(&self, p: usize) -> usize {
        self.alive[p].iter().filter(|&&a| a).count()
    }

    pub fn alive_counts(&self) -> Vec<usize> {
        (0..self.num_partitions()).map(|p| self.alive_count(p)).collect()
    }

    pub fn survivors(&self) -> Vec<Vec<u32>> {
        self.alive
            .iter()
            .map(|a| {
                a.iter()
                    .enumerate()
                    .filter(|(_, &x)| x)
                    .map(|(i, _)| i as u32)
                    .collect()
            })
            .collect()
    }

    /// True when `(p, v)` and `(q, u)` are linked.
    pub fn linked(&self, p: usize, v: u32, q: usize, u: u32) -> bool {
        match self.partners[p].binary_search(&q) {
            Ok(j) => self.links[p][v as usize][j].binary_search(&u).is_ok(),
            Err(_) => false,
        }
    }

    /// Product of the perception vector times `w2`.
    pub fn bound(&self, p: usize, v: usize) -> f64 {
        self.perception[p][v].iter().product::<f64>() * self.w2[p][v]
    }

    fn has_all_partners(&self, p: usize, v: usize) -> bool {
        self.links[p][v].iter().enumerate().all(|(j, l)| {
            let q = self.partners[p][j];
            l.iter().any(|&u| self.alive[q][u as usize])
        })
    }

    /// Perception vector recomputed from the alive neighbors. `None` when
    /// some partner partition has no alive neighbor.
    fn refreshed(&self, p: usize, v: usize) -> Option<Vec<f64>> {
        let k = self.num_partitions();
        let old = &self.perception[p][v];
        let mut new = old.clone();
        for (j, l) in self.links[p][v].iter().enumerate() {
            let q = self.partners[p][j];
            let mut best = vec![0.0f64; k];
            let mut any = false;
            for &u in l {
                if !self.alive[q][u as usize] {
                    continue;
                }
                any = true;
                for (b, &x) in best.iter_mut().zip(&self.perception[q][u as usize]) {
                    *b = b.max(x);
                }
            }
            if !any {
                return None;
            }
            for x in 0..k {
                if x != p {
                    new[x] = new[x].min(best[x]);
                }
            }
        }
        Some(new)
    }

    fn neighbors_of(&self, p: usize, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links[p][v].iter().enumerate().flat_map(move |(j, l)| {
            let q = self.partners[p][j];
            l.iter()
                .filter(move |&&u| self.alive[q][u as usize])
                .map(move |&u| (q, u as usize))
        })
    }

    fn all_alive(&self) -> VecDeque<(usize, usize)> {
        (0..self.num_partitions())
            .flat_map(|p| (0..self.w1[p].len()).map(move |v| (p, v)))
            .filter(|&(p, v)| self.alive[p][v])
            .collect()
    }
}

/// Deletes vertices lacking a link into some partner partition, until none
/// remain.
pub fn reduce_structure(g: &mut KPartite) {
    let mut queue = g.all_alive();
    while let Some((p, v)) = queue.pop_front() {
        if g.alive[p][v] && !g.has_all_partners(p, v) {
            g.alive[p][v] = false;
            let next: Vec<_> = g.neighbors_of(p, v).collect();
            queue.extend(next);
        }
    }
}

/// Synchronous message-passing rounds tightening perception vectors and
/// deleting vertices whose bound falls below `alpha`.
pub fn reduce_upperbounds(g: &mut KPartite, alpha: f64) {
    loop {
        let mut changed = false;
        let updates: Vec<Vec<Option<Vec<f64>>>> = (0..g.num_partitions())
            .map(|p| {
                (0..g.w1[p].len())
                    .map(|v| {
                        if !g.alive[p][v] {
                            return None;
                        }
                        let mut new = g.perception[p][v].clone();
                        for (j, l) in g.links[p][v].iter().enumerate() {
                            let q = g.partners[p][j];
                            for x in 0..new.len() {
                                if x == p {
                                    continue;
                                }
                                let best = l
                                    .iter()
                                    .filter(|&&u| g.alive[q][u as usize])
                                    .map(|&u| g.perception[q][u as usize][x])
                                    .fold(None, |acc: Option<f64>, y| Some(acc.map_or(y, |a| a.max(y))));
                                // A partition without alive neighbors is
                                // left to structural reduction.
                                if let Some(b) = best {
                                    new[x] = new[x].min(b);
                                }
                            }
                        }
                        Some(new)
                    })
                    .collect()
            })
            .collect();
        for (p, row) in updates.into_iter().enumerate() {
            for (v, new) in row.into_iter().enumerate() {
                let Some(new) = new else { continue };
                if new != g.perception[p][v] {
                    g.perception[p][v] = new;
                    changed = true;
                }
                if g.bound(p, v) < alpha {
                    g.alive[p][v] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Interleaves both reductions with a work queue until nothing changes.
pub fn joint_reduce(g: &mut KPartite, alpha: f64) {
    let mut queued: Vec<Vec<bool>> = g.alive.clone();
    let mut queue = g.all_alive();
    while let Some((p, v)) = queue.pop_front() {
        queued[p][v] = false;
        if !g.alive[p][v] {
            continue;
        }
        let refreshed = g.refreshed(p, v);
        let delete = match &refreshed {
            None => true,
            Some(new) => new.iter().product::<f64>() * g.w2[p][v] < alpha,
        };
        let changed = match refreshed {
            Some(new) if new != g.perception[p][v] => {
                g.perception[p][v] = new;
                true
            }
            _ => false,
        };
        if delete {
            g.alive[p][v] = false;
        }
        if delete || changed {
            let next: Vec<_> = g.neighbors_of(p, v).collect();
            for (q, u) in next {
                if !queued[q][u] {
                    queued[q][u] = true;
                    queue.push_back((q, u));
                }
            }
        }
    }
}

/// Bulk-synchronous variant of [`joint_reduce`]: each round recomputes every
/// partition in parallel from the previous round's state.
pub fn joint_reduce_parallel(g: &mut KPartite, alpha: f64) {
    loop {
        let snapshot: &KPartite = g;
        let updates: Vec<Vec<(usize, Option<Vec<f64>>)>> = (0..snapshot.num_partitions())
            .into_par_iter()
            .map(|p| {
                (0..snapshot.w1[p].len())
                    .filter(|&v| snapshot.alive[p][v])
                    .map(|v| (v, snapshot.refreshed(p, v)))
                    .collect()
            })
            .collect();
        let mut changed = false;
        for (p, row) in updates.into_iter().enumerate() {
            for (v, refreshed) in row {
                match refreshed {
                    None => {
                        g.alive[p][v] = false;
                        changed = true;
                    }
                    Some(new) => {
                        if new != g.perception[p][v] {
                            g.perception[p][v] = new;
                            changed = true;
                        }
                        if g.bound(p, v) < alpha {
                            g.alive[p][v] = false;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(w1a: f64, w1b: f64) -> KPartite {
        KPartite::new(
            vec![vec![1], vec![0]],
            vec![vec![w1a], vec![w1b]],
            vec![vec![1.0], vec![1.0]],
            [(0, 0, 1, 0)],
        )
    }

    #[test]
    fn bound_below_threshold_deletes_both() {
        let mut g = pair(0.5, 0.5);
        reduce_upperbounds(&mut g, 0.3);
        assert_eq!(g.alive_counts(), vec![0, 0]);
        let mut g = pair(0.5, 0.5);
        joint_reduce(&mut g, 0.3);
        assert_eq!(g.alive_counts(), vec![0, 0]);
    }

    #[test]
    fn zero_alpha_deletes_nothing() {
        let mut g = pair(0.1, 0.1);
        joint_reduce(&mut g, 0.0);
        assert_eq!(g.alive_counts(), vec![1, 1]);
        assert_eq!(g.perception[0][0], vec![0.1, 0.1]);
    }

    #[test]
    fn structure_cascades() {
        // Chain 0 - 1 - 2 where partition 1's only vertex links to nothing
        // in partition 2.
        let mut g = KPartite::new(
            vec![vec![1], vec![0, 2], vec![1]],
            vec![vec![1.0], vec![1.0], vec![1.0]],
            vec![vec![1.0], vec![1.0], vec![1.0]],
            [(0, 0, 1, 0)],
        );
        reduce_structure(&mut g);
        assert_eq!(g.alive_counts(), vec![0, 0, 0]);
    }

    #[test]
    fn fully_linked_graph_is_unchanged_by_structure() {
        let mut g = KPartite::new(
            vec![vec![1], vec![0]],
            vec![vec![1.0, 0.5], vec![0.7]],
            vec![vec![1.0, 1.0], vec![1.0]],
            [(0, 0, 1, 0), (0, 1, 1, 0)],
        );
        let before = g.clone();
        reduce_structure(&mut g);
        assert_eq!(g, before);
    }
}
