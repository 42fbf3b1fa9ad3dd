//! Small random inputs shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use pegraph::index::{
    build_histograms, build_path_index, compute_context, default_points, ContextTable, Histogram,
    IndexParams, PathIndex,
};
use pegraph::model::{
    build_entity_graph, sort_named_matches, EdgeDoc, EntityGraph, MergeSpec, NamedMatch, Pgd,
    ReferenceDoc, SetDoc,
};
use pegraph::query::{QueryGraph, QueryNode};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub const TOLERANCE: f64 = 1e-9;

/// Random PGD with at most 8 references, 3 labels, 2 non-singleton sets and
/// edge density at most 0.5.
pub fn small_pgd(seed: u64, correlated: bool) -> Pgd {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_labels = rng.gen_range(1..=3);
    let labels: Vec<String> = ["a", "b", "c"][..n_labels].iter().map(|s| s.to_string()).collect();
    let n = rng.gen_range(2..=8);
    let references = (0..n)
        .map(|i| {
            let mut dist = BTreeMap::new();
            if rng.gen_bool(0.4) {
                dist.insert(labels[rng.gen_range(0..n_labels)].clone(), 1.0);
            } else {
                let w: Vec<f64> = (0..n_labels)
                    .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.05..1.0) })
                    .collect();
                let total: f64 = w.iter().sum();
                if total == 0.0 {
                    dist.insert(labels[0].clone(), 1.0);
                } else {
                    for (l, x) in labels.iter().zip(&w) {
                        if *x > 0.0 {
                            dist.insert(l.clone(), x / total);
                        }
                    }
                }
            }
            ReferenceDoc {
                id: format!("r{i}"),
                dist,
            }
        })
        .collect();
    let density = rng.gen_range(0.15..=0.5);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if !rng.gen_bool(density) {
                continue;
            }
            let p = if rng.gen_bool(0.3) { 1.0 } else { rng.gen_range(0.05..1.0) };
            let (p, cpt) = if correlated {
                let mut cpt = BTreeMap::new();
                for la in &labels {
                    for lb in &labels {
                        let v = if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.05..=1.0) };
                        cpt.insert(format!("{la},{lb}"), v);
                    }
                }
                (None, Some(cpt))
            } else {
                (Some(p), None)
            };
            edges.push(EdgeDoc {
                u: format!("r{a}"),
                v: format!("r{b}"),
                p,
                cpt,
            });
        }
    }
    let n_sets = rng.gen_range(0..=2);
    let mut sets = Vec::new();
    for s in 0..n_sets {
        let size = rng.gen_range(2..=3.min(n));
        let refs = rand::seq::index::sample(&mut rng, n, size)
            .into_iter()
            .map(|i| format!("r{i}"))
            .collect();
        sets.push(SetDoc {
            id: format!("s{s}"),
            refs,
            p: Some(rng.gen_range(0.1..0.95)),
        });
    }
    Pgd {
        labels,
        references,
        edges,
        sets,
        merge: MergeSpec::default(),
    }
}

/// Random connected query with at most 4 nodes over `labels`.
pub fn small_query(seed: u64, labels: &[String], alpha: f64) -> QueryGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let n = rng.gen_range(1..=4);
    let max = n * (n - 1) / 2;
    let m = if n == 1 { 0 } else { rng.gen_range(n - 1..=max) };
    if n == 1 {
        let nodes = vec![QueryNode {
            id: "q0".into(),
            label: labels[rng.gen_range(0..labels.len())].clone(),
        }];
        return QueryGraph::new(nodes, Vec::new(), alpha).unwrap();
    }
    pegraph::datagen::generate_query(n, m, labels, rng.gen(), alpha).unwrap()
}

pub struct Artifacts {
    pub graph: EntityGraph,
    pub index: PathIndex,
    pub context: ContextTable,
    pub histogram: Histogram,
}

pub fn artifacts(pgd: &Pgd, params: IndexParams) -> Artifacts {
    let graph = build_entity_graph(pgd).unwrap();
    let index = build_path_index(&graph, params).unwrap();
    let context = compute_context(&graph);
    let histogram = build_histograms(&index, &default_points(params.beta)).unwrap();
    Artifacts {
        graph,
        index,
        context,
        histogram,
    }
}

/// Differences between two answer sets, ignoring matches whose probability
/// lies within rounding distance of the threshold.
pub fn answer_mismatches(got: &[NamedMatch], want: &[NamedMatch], alpha: f64) -> Vec<String> {
    let mut got = got.to_vec();
    let mut want = want.to_vec();
    sort_named_matches(&mut got);
    sort_named_matches(&mut want);
    let index = |ms: &[NamedMatch]| -> BTreeMap<Vec<String>, f64> {
        ms.iter().map(|m| (m.mapping.clone(), m.probability)).collect()
    };
    let (g, w) = (index(&got), index(&want));
    let mut out = Vec::new();
    for (k, &p) in &w {
        match g.get(k) {
            Some(&q) if (p - q).abs() <= TOLERANCE => {}
            Some(&q) => out.push(format!("{k:?}: got {q}, want {p}")),
            None if (p - alpha).abs() <= TOLERANCE => {}
            None => out.push(format!("{k:?}: missing (want {p})")),
        }
    }
    for (k, &q) in &g {
        if !w.contains_key(k) && (q - alpha).abs() > TOLERANCE {
            out.push(format!("{k:?}: unexpected ({q})"));
        }
    }
    out
}

/// Brute-force index contents: every simple path of length at most
/// `max_len` over pairwise reference-disjoint entities and every label
/// assignment from the supports, kept when its probability reaches `beta`.
/// Keys are `(canonical label sequence, nodes in stored orientation)`.
pub fn brute_force_paths(
    g: &EntityGraph,
    max_len: usize,
    beta: f64,
) -> BTreeMap<(Vec<u16>, Vec<u32>), (f64, f64)> {
    let mut out = BTreeMap::new();
    let mut path = Vec::new();
    for v in 0..g.num_nodes() as u32 {
        path.push(v);
        walk(g, max_len, beta, &mut path, &mut out);
        path.pop();
    }
    out
}

fn walk(
    g: &EntityGraph,
    max_len: usize,
    beta: f64,
    path: &mut Vec<u32>,
    out: &mut BTreeMap<(Vec<u16>, Vec<u32>), (f64, f64)>,
) {
    let pr_n = g.node_existence_marginal(path);
    let mut labels = vec![0u16; path.len()];
    assign(g, path, 0, &mut labels, pr_n, beta, out);
    if path.len() > max_len {
        return;
    }
    let last = *path.last().unwrap();
    let next: Vec<u32> = g.neighbors(last).iter().map(|&(w, _)| w).collect();
    for w in next {
        if path.iter().all(|&u| u != w && g.refs_disjoint(u, w)) {
            path.push(w);
            walk(g, max_len, beta, path, out);
            path.pop();
        }
    }
}

fn assign(
    g: &EntityGraph,
    path: &[u32],
    i: usize,
    labels: &mut Vec<u16>,
    pr_n: f64,
    beta: f64,
    out: &mut BTreeMap<(Vec<u16>, Vec<u32>), (f64, f64)>,
) {
    if i == path.len() {
        let mut le = 1.0;
        for (k, &v) in path.iter().enumerate() {
            le *= g.label_prob(v, labels[k]);
        }
        for k in 1..path.len() {
            le *= g.edge_prob(path[k - 1], path[k], labels[k - 1], labels[k]);
        }
        if le * pr_n < beta {
            return;
        }
        let rev_labels: Vec<u16> = labels.iter().rev().copied().collect();
        let keep = if *labels < rev_labels {
            true
        } else if *labels > rev_labels {
            false
        } else {
            path.len() == 1 || path[0] < path[path.len() - 1]
        };
        if keep {
            out.insert((labels.clone(), path.to_vec()), (le, pr_n));
        }
        return;
    }
    for l in 0..g.num_labels() as u16 {
        if g.label_prob(path[i], l) > 0.0 {
            labels[i] = l;
            assign(g, path, i + 1, labels, pr_n, beta, out);
        }
    }
}

/// Mismatches between an index and the brute-force enumeration, including
/// records outside their bucket and broken reversal symmetry.
pub fn index_mismatches(g: &EntityGraph, idx: &PathIndex) -> Vec<String> {
    let p = idx.params();
    let want = brute_force_paths(g, p.max_len, p.beta);
    let mut got = BTreeMap::new();
    let mut errors = Vec::new();
    let seqs: Vec<Vec<u16>> = idx.sequences().map(<[u16]>::to_vec).collect();
    for seq in &seqs {
        // Records are stored bucket by bucket, so the full scan splits into
        // the directory's ranges.
        let records = idx.stored_records(seq, 0.0).unwrap();
        let mut start = 0;
        for range in idx.bucket_ranges(seq) {
            let lo = p.bucket_floor(range.bucket);
            let hi = lo + p.gamma;
            let end = start + range.count as usize;
            for r in &records[start..end.min(records.len())] {
                let pr = r.probability();
                let inside = pr >= lo - 1e-12 && (pr < hi + 1e-12 || range.bucket == p.top_bucket());
                if p.bucket_of(pr) != range.bucket || !inside {
                    errors.push(format!("{seq:?} {:?}: {pr} outside bucket [{lo}, {hi})", r.nodes));
                }
            }
            start = end;
        }
        if start != records.len() {
            errors.push(format!("{seq:?}: directory counts {start}, scan found {}", records.len()));
        }
        for r in records {
            got.insert((seq.clone(), r.nodes.clone()), (r.pr_le, r.pr_n));
        }
    }
    let at_threshold = |le: f64, n: f64| (le * n - p.beta).abs() <= 1e-12;
    for (k, &(le, n)) in &want {
        match got.get(k) {
            None if at_threshold(le, n) => {}
            None => errors.push(format!("missing {k:?} ({})", le * n)),
            Some(&(gl, gn)) if (gl - le).abs() > TOLERANCE || (gn - n).abs() > TOLERANCE => {
                errors.push(format!("{k:?}: got ({gl}, {gn}), want ({le}, {n})"))
            }
            _ => {}
        }
    }
    for (k, &(le, n)) in &got {
        if !want.contains_key(k) && !at_threshold(le, n) {
            errors.push(format!("unexpected {k:?}"));
        }
    }
    // Every lookup in one direction is the reversal of the other.
    for seq in &seqs {
        let rev: Vec<u16> = seq.iter().rev().copied().collect();
        let mut fwd: Vec<Vec<u32>> = idx.lookup(seq, p.beta).unwrap().into_iter().map(|r| r.nodes).collect();
        let mut back: Vec<Vec<u32>> = idx
            .lookup(&rev, p.beta)
            .unwrap()
            .into_iter()
            .map(|r| r.nodes.into_iter().rev().collect())
            .collect();
        fwd.sort();
        back.sort();
        if fwd != back {
            errors.push(format!("reversal symmetry broken for {seq:?}"));
        }
    }
    errors
}
