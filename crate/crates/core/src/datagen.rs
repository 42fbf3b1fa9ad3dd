//! Synthetic PGDs and random queries for experiments.
//!
//! Graph structure follows preferential attachment from a three-node seed
//! clique. Label distributions are Zipf-weighted: uniform draws `p_i` are
//! scaled to `p_i / i`, normalized and assigned to labels in random order.
//! A fraction of references, edges and reference sets is uncertain; the
//! rest are degenerate.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::model::{EdgeDoc, MergeSpec, Pgd, ReferenceDoc, SetDoc};
use crate::query::{QueryGraph, QueryNode};

/// Seed clique size of the attachment process.
const SEED_CLIQUE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub n_refs: usize,
    pub n_edges: usize,
    pub n_labels: usize,
    /// Fraction of references, edges and sets with non-degenerate
    /// distributions.
    pub uncertain_fraction: f64,
    /// Number of groups.
    pub groups: usize,
    /// References per group.
    pub group_size: usize,
    /// Disjoint pairs per group that become candidate reference sets.
    pub pairs_per_group: usize,
    /// Emit label-conditioned edge tables instead of scalar probabilities.
    pub correlated: bool,
    pub seed: u64,
}

impl GenParams {
    /// Defaults for `n_refs` references: five edges per reference, ten
    /// labels, 20% uncertainty and one group of four per thousand references
    /// holding two pairs.
    pub fn new(n_refs: usize, seed: u64) -> Self {
        GenParams {
            n_refs,
            n_edges: 5 * n_refs,
            n_labels: 10,
            uncertain_fraction: 0.2,
            groups: n_refs / 1000,
            group_size: 4,
            pairs_per_group: 2,
            correlated: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n_labels == 0 {
            return bad("at least one label is required".into());
        }
        if !(0.0..=1.0).contains(&self.uncertain_fraction) {
            return bad(format!("uncertain fraction {} outside [0, 1]", self.uncertain_fraction));
        }
        if 2 * self.pairs_per_group > self.group_size {
            return bad(format!(
                "{} disjoint pairs do not fit in groups of {}",
                self.pairs_per_group, self.group_size
            ));
        }
        if self.groups * self.group_size > self.n_refs {
            return bad(format!(
                "{} groups of {} exceed {} references",
                self.groups, self.group_size, self.n_refs
            ));
        }
        let max_edges = self.n_refs * self.n_refs.saturating_sub(1) / 2;
        if self.n_edges > max_edges {
            return bad(format!("{} edges exceed the {} possible", self.n_edges, max_edges));
        }
        Ok(())
    }
}

pub fn label_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("l{i}")).collect()
}

/// Zipf-weighted distribution over `n` outcomes in random order.
fn zipf_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (1..=n).map(|i| rng.gen_range(f64::EPSILON..1.0) / i as f64).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w.shuffle(rng);
    w
}

/// Indices of an exact `fraction` of `n` items.
fn uncertain_subset(rng: &mut ChaCha8Rng, n: usize, fraction: f64) -> Vec<bool> {
    let count = ((n as f64) * fraction).round() as usize;
    let mut flags = vec![false; n];
    for i in sample(rng, n, count.min(n)) {
        flags[i] = true;
    }
    flags
}

fn existence_prob(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(0.5..1.0)
}

/// Undirected edges by preferential attachment: each new node attaches to
/// existing nodes chosen with probability proportional to degree, with the
/// per-node edge budget spread evenly to reach `n_edges`.
fn attachment_edges(rng: &mut ChaCha8Rng, n: usize, n_edges: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(n_edges);
    let mut seen = HashSet::with_capacity(n_edges);
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * n_edges);
    let seed = SEED_CLIQUE.min(n);
    'seed: for a in 0..seed {
        for b in a + 1..seed {
            if edges.len() == n_edges {
                break 'seed;
            }
            edges.push((a, b));
            seen.insert((a, b));
            endpoints.extend([a, b]);
        }
    }
    if n <= seed {
        return edges;
    }
    let remaining = n_edges - edges.len();
    let newcomers = n - seed;
    for (k, v) in (seed..n).enumerate() {
        let budget = (k + 1) * remaining / newcomers - k * remaining / newcomers;
        let budget = budget.min(v);
        let mut added = 0;
        let mut attempts = 0;
        while added < budget {
            attempts += 1;
            let u = if endpoints.is_empty() || attempts > 8 * budget + 16 {
                rng.gen_range(0..v)
            } else {
                endpoints[rng.gen_range(0..endpoints.len())]
            };
            if u != v && seen.insert((u, v)) {
                edges.push((u, v));
                endpoints.extend([u, v]);
                added += 1;
            }
        }
    }
    // Newcomers cannot absorb the whole budget when it exceeds their
    // possible neighbors; top up with random pairs.
    while edges.len() < n_edges {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && seen.insert((a.min(b), a.max(b))) {
            edges.push((a.min(b), a.max(b)));
        }
    }
    edges
}

pub fn generate_pgd(p: &GenParams) -> Result<Pgd> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let labels = label_names(p.n_labels);
    let ref_id = |i: usize| format!("r{i}");

    let uncertain_refs = uncertain_subset(&mut rng, p.n_refs, p.uncertain_fraction);
    let references = (0..p.n_refs)
        .map(|i| {
            let w = zipf_weights(&mut rng, p.n_labels);
            let dist: BTreeMap<String, f64> = if uncertain_refs[i] {
                labels.iter().cloned().zip(w).collect()
            } else {
                let pick = WeightedIndex::new(&w).expect("positive weights").sample(&mut rng);
                [(labels[pick].clone(), 1.0)].into_iter().collect()
            };
            ReferenceDoc { id: ref_id(i), dist }
        })
        .collect();

    let pairs = attachment_edges(&mut rng, p.n_refs, p.n_edges);
    let uncertain_edges = uncertain_subset(&mut rng, pairs.len(), p.uncertain_fraction);
    let edges = pairs
        .iter()
        .zip(uncertain_edges)
        .map(|(&(a, b), uncertain)| {
            let prob = if uncertain { existence_prob(&mut rng) } else { 1.0 };
            let (p_scalar, cpt) = if p.correlated {
                let mut cpt = BTreeMap::new();
                for la in &labels {
                    for lb in &labels {
                        let v = if la == lb { prob } else { 0.8 * prob };
                        cpt.insert(format!("{la},{lb}"), v);
                    }
                }
                (None, Some(cpt))
            } else {
                (Some(prob), None)
            };
            EdgeDoc {
                u: ref_id(a),
                v: ref_id(b),
                p: p_scalar,
                cpt,
            }
        })
        .collect();

    let members = sample(&mut rng, p.n_refs, p.groups * p.group_size).into_vec();
    let n_sets = p.groups * p.pairs_per_group;
    let uncertain_sets = uncertain_subset(&mut rng, n_sets, p.uncertain_fraction);
    let mut sets = Vec::with_capacity(n_sets);
    for (g, group) in members.chunks(p.group_size).enumerate() {
        for j in 0..p.pairs_per_group {
            let prob = if uncertain_sets[sets.len()] {
                existence_prob(&mut rng)
            } else {
                1.0
            };
            sets.push(SetDoc {
                id: format!("g{g}p{j}"),
                refs: vec![ref_id(group[2 * j]), ref_id(group[2 * j + 1])],
                p: Some(prob),
            });
        }
    }

    Ok(Pgd {
        labels,
        references,
        edges,
        sets,
        merge: MergeSpec::default(),
    })
}

/// Random connected simple query with `n` nodes, `m` edges and labels drawn
/// uniformly from `labels`.
pub fn generate_query(n: usize, m: usize, labels: &[String], seed: u64, alpha: f64) -> Result<QueryGraph> {
    if n == 0 || m + 1 < n || m > n * (n - 1) / 2 {
        return Err(Error::InvalidParameter(format!(
            "no connected simple graph has {n} nodes and {m} edges"
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidParameter("no labels to draw from".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = HashSet::new();
    for i in 1..n {
        let a = order[i];
        let b = order[rng.gen_range(0..i)];
        edges.insert((a.min(b), a.max(b)));
    }
    let mut rest: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|e| !edges.contains(e))
        .collect();
    rest.shuffle(&mut rng);
    let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
    edges.sort_unstable();
    edges.extend(rest.into_iter().take(m - (n - 1)));
    let nodes = (0..n)
        .map(|i| QueryNode {
            id: format!("q{i}"),
            label: labels[rng.gen_range(0..labels.len())].clone(),
        })
        .collect();
    QueryGraph::new(nodes, edges, alpha)
}
