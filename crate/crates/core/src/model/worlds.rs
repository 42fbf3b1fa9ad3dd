//! Brute-force semantics: possible worlds and the reference oracle for
//! subgraph matching.
//!
//! Nothing here reuses the entity graph. The oracle recomputes merged
//! factors straight from the PGD and obtains node-existence probabilities by
//! enumerating every global assignment of the set-existence variables, so it
//! can serve as ground truth for the indexed pipeline.

use std::collections::{BTreeMap, HashMap};

use super::matching::{sort_named_matches, NamedMatch};
use super::pgd::{parse_cpt_key, MergeFn, Pgd};
use crate::error::{Error, Result};
use crate::query::QueryGraph;

/// Upper bound on enumerated worlds (and on global node assignments).
pub const WORLD_CAP: u128 = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub struct PossibleWorld {
    /// Entity ids of the existing nodes.
    pub nodes: Vec<String>,
    /// Label of each existing node.
    pub labels: Vec<String>,
    /// Existing edges as index pairs into `nodes`, `a < b`.
    pub edges: Vec<(usize, usize)>,
    pub probability: f64,
}

/// The PGD's semantics recomputed by brute force.
struct Semantics {
    labels: Vec<String>,
    names: Vec<String>,
    /// Label distribution per entity.
    label_dist: Vec<Vec<f64>>,
    /// `edge[i][j][li * nl + lj]`, zero when no reference edge runs between
    /// the two entities.
    edge: Vec<Vec<Vec<f64>>>,
    /// Valid node assignments (bitmask over entities) with normalized
    /// probability.
    assignments: Vec<(u64, f64)>,
}

impl Semantics {
    fn new(pgd: &Pgd) -> Result<Self> {
        pgd.validate().into_result()?;
        let nl = pgd.labels.len();
        let label_of = |l: &str| pgd.labels.iter().position(|x| x == l).expect("declared label");
        let ref_of = |r: &str| {
            pgd.references
                .iter()
                .position(|x| x.id == r)
                .expect("declared reference")
        };
        if pgd.references.len() > 64 {
            return Err(Error::EnumerationCap {
                required: 1u128 << 64,
                cap: WORLD_CAP,
            });
        }

        let mut entities: Vec<(String, u64, Option<f64>)> = Vec::new();
        let mut declared_singleton = vec![false; pgd.references.len()];
        for s in &pgd.sets {
            let mask = s.refs.iter().fold(0u64, |m, r| m | 1 << ref_of(r));
            if s.refs.len() == 1 {
                declared_singleton[ref_of(&s.refs[0])] = true;
            }
            entities.push((s.id.clone(), mask, s.p));
        }
        for (i, r) in pgd.references.iter().enumerate() {
            if !declared_singleton[i] {
                entities.push((r.id.clone(), 1 << i, None));
            }
        }
        let n = entities.len();
        if n >= 64 || (1u128 << n) > WORLD_CAP {
            return Err(Error::EnumerationCap {
                required: 1u128 << n.min(127),
                cap: WORLD_CAP,
            });
        }

        let all_refs: u64 = if pgd.references.len() == 64 {
            u64::MAX
        } else {
            (1u64 << pgd.references.len()) - 1
        };
        let mut assignments = Vec::new();
        let mut z = 0.0;
        for subset in 0u64..(1u64 << n) {
            let mut union = 0u64;
            let mut overlap = false;
            for (i, (_, mask, _)) in entities.iter().enumerate() {
                if subset & (1 << i) != 0 {
                    overlap |= union & mask != 0;
                    union |= mask;
                }
            }
            if overlap || union != all_refs {
                continue;
            }
            let weight: f64 = entities
                .iter()
                .enumerate()
                .map(|(i, (_, _, p))| match p {
                    Some(p) if subset & (1 << i) != 0 => *p,
                    Some(p) => 1.0 - p,
                    None => 1.0,
                })
                .product();
            if weight > 0.0 {
                z += weight;
                assignments.push((subset, weight));
            }
        }
        if z <= 0.0 {
            return Err(Error::DegenerateComponent {
                component: entities.iter().map(|e| e.0.clone()).collect(),
            });
        }
        for a in &mut assignments {
            a.1 /= z;
        }

        let members = |mask: u64| (0..pgd.references.len()).filter(move |r| mask & (1 << r) != 0);
        let label_dist: Vec<Vec<f64>> = entities
            .iter()
            .map(|(_, mask, _)| {
                let mut dist = vec![0.0; nl];
                let mut count = 0.0;
                for r in members(*mask) {
                    for (l, p) in &pgd.references[r].dist {
                        dist[label_of(l)] += p;
                    }
                    count += 1.0;
                }
                dist.iter_mut().for_each(|p| *p /= count);
                dist
            })
            .collect();

        let mut edge = vec![vec![vec![0.0; nl * nl]; n]; n];
        for i in 0..n {
            for j in 0..n {
                let (mi, mj) = (entities[i].1, entities[j].1);
                if i == j || mi & mj != 0 {
                    continue;
                }
                for li in 0..nl {
                    for lj in 0..nl {
                        let mut values = Vec::new();
                        for e in &pgd.edges {
                            let (u, v) = (ref_of(&e.u), ref_of(&e.v));
                            let forward = mi & (1 << u) != 0 && mj & (1 << v) != 0;
                            let backward = mi & (1 << v) != 0 && mj & (1 << u) != 0;
                            if !forward && !backward {
                                continue;
                            }
                            // Labels of the reference edge's u and v ends.
                            let (lu, lv) = if forward { (li, lj) } else { (lj, li) };
                            let value = match (&e.p, &e.cpt) {
                                (Some(p), _) => *p,
                                (None, Some(cpt)) => cpt
                                    .iter()
                                    .find(|(k, _)| {
                                        let (a, b) = parse_cpt_key(k).expect("validated");
                                        label_of(a) == lu && label_of(b) == lv
                                    })
                                    .map_or(0.0, |(_, &p)| p),
                                (None, None) => unreachable!(),
                            };
                            values.push(value);
                        }
                        if values.is_empty() {
                            continue;
                        }
                        edge[i][j][li * nl + lj] = match pgd.merge.edges {
                            MergeFn::Average => values.iter().sum::<f64>() / values.len() as f64,
                            MergeFn::Disjunct => {
                                1.0 - values.iter().map(|p| 1.0 - p).product::<f64>()
                            }
                        };
                    }
                }
            }
        }

        Ok(Semantics {
            labels: pgd.labels.clone(),
            names: entities.into_iter().map(|e| e.0).collect(),
            label_dist,
            edge,
            assignments,
        })
    }

    fn nl(&self) -> usize {
        self.labels.len()
    }

    fn edge_prob(&self, i: usize, j: usize, li: usize, lj: usize) -> f64 {
        self.edge[i][j][li * self.nl() + lj]
    }

    fn existence(&self, nodes: u64) -> f64 {
        self.assignments
            .iter()
            .filter(|(s, _)| s & nodes == nodes)
            .map(|(_, p)| p)
            .sum()
    }

    fn members(subset: u64) -> Vec<usize> {
        (0..64).filter(|i| subset & (1 << i) != 0).collect()
    }

    /// Upper bound on the number of worlds: label choices times two edge
    /// states for every pair with some positive entry.
    fn world_count(&self) -> u128 {
        let mut total: u128 = 0;
        for &(subset, _) in &self.assignments {
            let nodes = Self::members(subset);
            let mut count: u128 = 1;
            for &v in &nodes {
                let support = self.label_dist[v].iter().filter(|&&p| p > 0.0).count() as u128;
                count = count.saturating_mul(support.max(1));
            }
            for (x, &i) in nodes.iter().enumerate() {
                for &j in &nodes[x + 1..] {
                    if self.edge[i][j].iter().any(|&p| p > 0.0) {
                        count = count.saturating_mul(2);
                    }
                }
            }
            total = total.saturating_add(count);
        }
        total
    }
}

/// Calls `visit` for every possible world with positive probability.
pub fn for_each_possible_world(
    pgd: &Pgd,
    cap: u128,
    mut visit: impl FnMut(&PossibleWorld),
) -> Result<()> {
    let sem = Semantics::new(pgd)?;
    let required = sem.world_count();
    if required > cap {
        return Err(Error::EnumerationCap { required, cap });
    }
    let nl = sem.nl();
    for &(subset, p_nodes) in &sem.assignments {
        let nodes = Semantics::members(subset);
        let mut pairs = Vec::new();
        for (x, &i) in nodes.iter().enumerate() {
            for (y, &j) in nodes.iter().enumerate().skip(x + 1) {
                if sem.edge[i][j].iter().any(|&p| p > 0.0) {
                    pairs.push((x, y));
                }
            }
        }
        let mut labels = vec![0usize; nodes.len()];
        loop {
            let p_labels: f64 = nodes
                .iter()
                .zip(&labels)
                .map(|(&v, &l)| sem.label_dist[v][l])
                .product();
            if p_labels > 0.0 {
                for states in 0u64..(1u64 << pairs.len()) {
                    let mut p = p_nodes * p_labels;
                    let mut edges = Vec::new();
                    for (k, &(x, y)) in pairs.iter().enumerate() {
                        let pe = sem.edge_prob(nodes[x], nodes[y], labels[x], labels[y]);
                        if states & (1 << k) != 0 {
                            p *= pe;
                            edges.push((x, y));
                        } else {
                            p *= 1.0 - pe;
                        }
                    }
                    if p > 0.0 {
                        visit(&PossibleWorld {
                            nodes: nodes.iter().map(|&v| sem.names[v].clone()).collect(),
                            labels: labels.iter().map(|&l| sem.labels[l].clone()).collect(),
                            edges,
                            probability: p,
                        });
                    }
                }
            }
            // Next labeling in odometer order.
            let mut k = 0;
            while k < labels.len() {
                labels[k] += 1;
                if labels[k] < nl {
                    break;
                }
                labels[k] = 0;
                k += 1;
            }
            if k == labels.len() {
                break;
            }
        }
    }
    Ok(())
}

pub fn enumerate_possible_worlds(pgd: &Pgd, cap: u128) -> Result<Vec<PossibleWorld>> {
    let mut worlds = Vec::new();
    for_each_possible_world(pgd, cap, |w| worlds.push(w.clone()))?;
    Ok(worlds)
}

/// All matches of `q` with probability at least `alpha`.
///
/// For each candidate mapping the probability sums over every global node
/// assignment containing the matched entities, times the label and edge
/// factors of the matched elements; all other variables marginalize to one.
pub fn oracle_subgraph_match(pgd: &Pgd, q: &QueryGraph, alpha: f64) -> Result<Vec<NamedMatch>> {
    let sem = Semantics::new(pgd)?;
    let labels: Option<Vec<usize>> = q
        .nodes
        .iter()
        .map(|n| sem.labels.iter().position(|l| *l == n.label))
        .collect();
    let Some(labels) = labels else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let mut mapping = Vec::with_capacity(q.len());
    extend_mapping(&sem, q, &labels, alpha, &mut mapping, &mut out);
    sort_named_matches(&mut out);
    Ok(out)
}

fn extend_mapping(
    sem: &Semantics,
    q: &QueryGraph,
    labels: &[usize],
    alpha: f64,
    mapping: &mut Vec<usize>,
    out: &mut Vec<NamedMatch>,
) {
    let n = mapping.len();
    if n == q.len() {
        let mut pr_le = 1.0;
        for (k, &v) in mapping.iter().enumerate() {
            pr_le *= sem.label_dist[v][labels[k]];
        }
        for &(a, b) in &q.edges {
            pr_le *= sem.edge_prob(mapping[a], mapping[b], labels[a], labels[b]);
        }
        let nodes = mapping.iter().fold(0u64, |m, &v| m | 1 << v);
        let pr_n = sem.existence(nodes);
        let probability = pr_le * pr_n;
        if probability >= alpha && probability > 0.0 {
            out.push(NamedMatch {
                mapping: mapping.iter().map(|&v| sem.names[v].clone()).collect(),
                pr_le,
                pr_n,
                probability,
            });
        }
        return;
    }
    for v in 0..sem.names.len() {
        if mapping.contains(&v) || sem.label_dist[v][labels[n]] == 0.0 {
            continue;
        }
        let edges_ok = q.neighbors(n).iter().filter(|&&m| m < n).all(|&m| {
            sem.edge_prob(v, mapping[m], labels[n], labels[m]) > 0.0
        });
        if edges_ok {
            mapping.push(v);
            extend_mapping(sem, q, labels, alpha, mapping, out);
            mapping.pop();
        }
    }
}

/// Literal definition: sums, for every world, the probability of each
/// embedding of `q` into it. Only feasible for tiny PGDs.
pub fn oracle_subgraph_match_exhaustive(
    pgd: &Pgd,
    q: &QueryGraph,
    alpha: f64,
    cap: u128,
) -> Result<Vec<NamedMatch>> {
    let mut totals: BTreeMap<Vec<String>, f64> = BTreeMap::new();
    let mut existence: HashMap<Vec<String>, f64> = HashMap::new();
    for_each_possible_world(pgd, cap, |w| {
        let mut mapping = Vec::new();
        embed(w, q, &mut mapping, &mut |m| {
            let names: Vec<String> = m.iter().map(|&i| w.nodes[i].clone()).collect();
            *totals.entry(names).or_default() += w.probability;
        });
    })?;
    // Pr_n of a match is the mass of worlds holding its nodes, regardless of
    // labels and edges.
    for_each_possible_world(pgd, cap, |w| {
        for names in totals.keys() {
            if names.iter().all(|n| w.nodes.contains(n)) {
                *existence.entry(names.clone()).or_default() += w.probability;
            }
        }
    })?;
    let mut out: Vec<NamedMatch> = totals
        .into_iter()
        .filter(|(_, p)| *p >= alpha)
        .map(|(mapping, probability)| {
            let pr_n = existence[&mapping];
            NamedMatch {
                mapping,
                pr_le: probability / pr_n,
                pr_n,
                probability,
            }
        })
        .collect();
    sort_named_matches(&mut out);
    Ok(out)
}

fn embed(w: &PossibleWorld, q: &QueryGraph, mapping: &mut Vec<usize>, emit: &mut impl FnMut(&[usize])) {
    let n = mapping.len();
    if n == q.len() {
        emit(mapping);
        return;
    }
    for x in 0..w.nodes.len() {
        if mapping.contains(&x) || w.labels[x] != q.nodes[n].label {
            continue;
        }
        let ok = q.neighbors(n).iter().filter(|&&m| m < n).all(|&m| {
            let (a, b) = (x.min(mapping[m]), x.max(mapping[m]));
            w.edges.contains(&(a, b))
        });
        if ok {
            mapping.push(x);
            embed(w, q, mapping, emit);
            mapping.pop();
        }
    }
}
