//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line per criterion straight to stderr (bypassing output capture) and
//! fails if any criterion failed.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::{answer_mismatches, artifacts, index_mismatches, small_pgd, small_query, Artifacts};
use pegraph::datagen::{generate_pgd, generate_query, GenParams};
use pegraph::index::IndexParams;
use pegraph::model::{
    build_entity_graph, fixtures, oracle_subgraph_match, EdgeExistence, NamedMatch, NodeId,
};
use pegraph::query::{
    answer_query, joint_reduce, joint_reduce_parallel, Engine, KPartite, QueryGraph, QueryOptions,
    Reduction, Stages,
};
use pegraph::storage::{build_artifacts, index_records, open_artifacts, BuildConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn report(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

fn within(elapsed: Duration, limit: Duration, what: &str) {
    assert!(elapsed <= limit, "{what} took {elapsed:?}, limit {limit:?}");
}

// 1. Running example.

fn running_example() {
    let start = Instant::now();
    let pgd = fixtures::running_example();
    let g = build_entity_graph(&pgd).unwrap();
    let merged = g.node_id("s34").unwrap();
    let (r, i) = (g.label_id("r").unwrap(), g.label_id("i").unwrap());
    assert_eq!(g.label_prob(merged, r), 0.5);
    assert_eq!(g.label_prob(merged, i), 0.5);
    let s2 = g.node_id("s2").unwrap();
    let edge = g.edge_between(merged, s2).unwrap();
    assert_eq!(edge.existence, EdgeExistence::Independent(0.75));

    let a = artifacts(&pgd, IndexParams { max_len: 2, beta: 0.05, gamma: 0.1 });
    let q = QueryGraph::from_json(fixtures::RUNNING_QUERY).unwrap();
    let matches = answer_query(&a.graph, &a.index, &a.context, &a.histogram, &q).unwrap();
    let want: Vec<NodeId> = ["s3", "s2", "s4"].iter().map(|n| g.node_id(n).unwrap()).collect();
    let hit = matches.iter().find(|m| m.mapping == want).expect("match (s3, s2, s4)");
    assert!((hit.probability - 0.1).abs() < 1e-9, "probability {}", hit.probability);
    within(start.elapsed(), Duration::from_secs(1), "fixture");
}

// 2 and 4. Oracle equivalence and stage soundness on the same fixtures.

struct Fixture {
    pgd: pegraph::model::Pgd,
    art: Artifacts,
}

fn fixtures_for_oracle() -> Vec<(u64, bool, usize)> {
    (0..200u64)
        .flat_map(|seed| [(seed, false), (seed + 10_000, true)])
        .map(|(seed, correlated)| (seed, correlated, 1 + (seed as usize % 3)))
        .collect()
}

fn fixture(seed: u64, correlated: bool, max_len: usize) -> Fixture {
    let pgd = small_pgd(seed, correlated);
    let art = artifacts(&pgd, IndexParams { max_len, beta: 0.1, gamma: 0.1 });
    Fixture { pgd, art }
}

fn oracle_equivalence() {
    let start = Instant::now();
    let mut answers = 0;
    for (seed, correlated, max_len) in fixtures_for_oracle() {
        let f = fixture(seed, correlated, max_len);
        for (k, alpha) in [0.05, 0.3, 0.7].into_iter().enumerate() {
            let q = small_query(seed * 3 + k as u64, &f.pgd.labels, alpha);
            let want = oracle_subgraph_match(&f.pgd, &q, alpha).unwrap();
            let got: Vec<NamedMatch> =
                answer_query(&f.art.graph, &f.art.index, &f.art.context, &f.art.histogram, &q)
                    .unwrap()
                    .iter()
                    .map(|m| m.named(&f.art.graph))
                    .collect();
            let diff = answer_mismatches(&got, &want, alpha);
            assert!(diff.is_empty(), "seed {seed} alpha {alpha}: {diff:?}");
            answers += want.len();
        }
    }
    assert!(answers > 500, "fixtures produced only {answers} answers");
    within(start.elapsed(), Duration::from_secs(300), "oracle equivalence");
}

fn vertex_of(stages: &Stages, p: usize, mapping: &[NodeId]) -> Option<u32> {
    let nodes: Vec<NodeId> = stages.decomposition.paths[p].iter().map(|&n| mapping[n]).collect();
    stages.candidates[p]
        .iter()
        .position(|r| r.nodes == nodes)
        .map(|v| v as u32)
}

fn stage_soundness() {
    let mut checked = 0;
    for (seed, correlated, max_len) in fixtures_for_oracle() {
        let f = fixture(seed, correlated, max_len);
        let g = &f.art.graph;
        let engine = Engine::new(g, &f.art.index, &f.art.context, &f.art.histogram);
        for (k, alpha) in [0.05, 0.3, 0.7].into_iter().enumerate() {
            let q = small_query(seed * 3 + k as u64, &f.pgd.labels, alpha);
            let want = oracle_subgraph_match(&f.pgd, &q, alpha).unwrap();
            for reduction in [Reduction::Structure, Reduction::Upperbounds, Reduction::Joint] {
                let opts = QueryOptions {
                    threads: 1,
                    reduction,
                    keep_stages: true,
                };
                let run = engine.run(&q, &opts).unwrap();
                for m in &want {
                    if (m.probability - alpha).abs() <= common::TOLERANCE {
                        continue;
                    }
                    let st = run.stages.as_ref().expect("labels resolve for answered queries");
                    let mapping: Vec<NodeId> = m.mapping.iter().map(|e| g.node_id(e).unwrap()).collect();
                    let ctx = format!("seed {seed} alpha {alpha} {reduction:?} {:?}", m.mapping);
                    for (n, &v) in mapping.iter().enumerate() {
                        assert!(st.node_candidates[n][v as usize], "node pruning lost {ctx}");
                    }
                    let verts: Vec<u32> = (0..st.decomposition.len())
                        .map(|p| vertex_of(st, p, &mapping).unwrap_or_else(|| panic!("path pruning lost {ctx}")))
                        .collect();
                    for (p, partners) in st.decomposition.partners.iter().enumerate() {
                        for &o in partners {
                            assert!(st.initial.linked(p, verts[p], o, verts[o]), "join lost {ctx}");
                        }
                    }
                    for (p, &v) in verts.iter().enumerate() {
                        assert!(st.reduced.alive[p][v as usize], "reduction lost {ctx}");
                    }
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 500, "only {checked} answers checked");
}

// 3. Index exactness.

fn index_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for k in 0..50u64 {
        let n = rng.gen_range(20..=500);
        let mut p = GenParams::new(n, 500 + k);
        p.n_edges = (2 * n).min(n * (n - 1) / 2);
        p.n_labels = rng.gen_range(2..=4);
        p.uncertain_fraction = rng.gen_range(0.2..0.6);
        p.groups = n / 40;
        p.correlated = k % 3 == 0;
        let g = build_entity_graph(&generate_pgd(&p).unwrap()).unwrap();
        let idx = pegraph::index::build_path_index(&g, IndexParams { max_len: 3, beta: 0.1, gamma: 0.1 }).unwrap();
        let errors = index_mismatches(&g, &idx);
        assert!(errors.is_empty(), "graph {k}: {:?}", &errors[..errors.len().min(5)]);
    }
    within(start.elapsed(), Duration::from_secs(120), "index exactness");
}

// 5. K-partite bounds and confluence.

/// Maximum of `Π w1 · min w2` over full matches through each vertex.
fn exhaustive_best(kp: &KPartite) -> Vec<Vec<f64>> {
    let k = kp.num_partitions();
    let mut best: Vec<Vec<f64>> = kp.w1.iter().map(|w| vec![0.0; w.len()]).collect();
    let mut choice = vec![0u32; k];
    fn rec(kp: &KPartite, p: usize, choice: &mut Vec<u32>, best: &mut Vec<Vec<f64>>) {
        if p == kp.num_partitions() {
            let w1: f64 = choice.iter().enumerate().map(|(x, &v)| kp.w1[x][v as usize]).product();
            let w2 = choice
                .iter()
                .enumerate()
                .map(|(x, &v)| kp.w2[x][v as usize])
                .fold(f64::INFINITY, f64::min);
            for (x, &v) in choice.iter().enumerate() {
                let b = &mut best[x][v as usize];
                *b = b.max(w1 * w2);
            }
            return;
        }
        for v in 0..kp.w1[p].len() as u32 {
            let consistent = (0..p).all(|o| {
                kp.partners[p].binary_search(&o).is_err() || kp.linked(p, v, o, choice[o])
            });
            if consistent {
                choice[p] = v;
                rec(kp, p + 1, choice, best);
            }
        }
    }
    rec(kp, 0, &mut choice, &mut best);
    best
}

fn random_kpartite(rng: &mut ChaCha8Rng) -> KPartite {
    let k = rng.gen_range(2..=4);
    let mut partners = vec![Vec::new(); k];
    for p in 1..k {
        // A spanning tree keeps the partner graph connected; extra pairs add cycles.
        let o = rng.gen_range(0..p);
        partners[p].push(o);
        partners[o].push(p);
        for o2 in 0..p {
            if o2 != o && rng.gen_bool(0.4) {
                partners[p].push(o2);
                partners[o2].push(p);
            }
        }
    }
    for l in &mut partners {
        l.sort_unstable();
    }
    let sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=20)).collect();
    let w1 = sizes.iter().map(|&n| (0..n).map(|_| rng.gen_range(0.2..=1.0)).collect()).collect();
    let w2 = sizes.iter().map(|&n| (0..n).map(|_| rng.gen_range(0.3..=1.0)).collect()).collect();
    let density = rng.gen_range(0.1..0.6);
    let mut links = Vec::new();
    for p in 0..k {
        for &o in partners[p].iter().filter(|&&o| o > p) {
            for v in 0..sizes[p] as u32 {
                for u in 0..sizes[o] as u32 {
                    if rng.gen_bool(density) {
                        links.push((p, v, o, u));
                    }
                }
            }
        }
    }
    KPartite::new(partners, w1, w2, links)
}

fn kpartite_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut pruned = 0;
    for case in 0..50 {
        let kp = random_kpartite(&mut rng);
        let alpha = rng.gen_range(0.01..0.3);
        let best = exhaustive_best(&kp);
        let mut seq = kp.clone();
        joint_reduce(&mut seq, alpha);
        let mut par = kp.clone();
        joint_reduce_parallel(&mut par, alpha);
        assert_eq!(seq.survivors(), par.survivors(), "case {case}: schedules disagree");
        for p in 0..kp.num_partitions() {
            for v in 0..kp.w1[p].len() {
                if seq.alive[p][v] {
                    assert!(
                        seq.bound(p, v) >= best[p][v] - 1e-12,
                        "case {case}: bound {} below best {}",
                        seq.bound(p, v),
                        best[p][v]
                    );
                } else {
                    assert!(best[p][v] < alpha, "case {case}: deleted vertex with a match of {}", best[p][v]);
                    pruned += 1;
                }
            }
        }
    }
    assert!(pruned > 0, "no instance exercised pruning");
}

// 6. Search-space trend.

fn search_space_trend(work: &Path) {
    let start = Instant::now();
    let pgd = generate_pgd(&GenParams::new(10_000, 3)).unwrap();
    let mut finals = Vec::new();
    for max_len in 1..=3 {
        let dir = work.join(format!("trend{max_len}"));
        let set = build_artifacts(&pgd, &BuildConfig::new(IndexParams { max_len, beta: 0.1, gamma: 0.1 }), &dir).unwrap();
        let mut row = Vec::new();
        for i in 0..5 {
            let q = generate_query(5, 7, &pgd.labels, 100 + i, 0.7).unwrap();
            let run = set.engine().run(&q, &QueryOptions::default()).unwrap();
            let s = run.sizes;
            assert!(
                s.reduced <= s.path_context && s.path_context <= s.path,
                "L={max_len} query {i}: {s:?}"
            );
            row.push(s.reduced);
        }
        finals.push(row);
        drop(set);
        std::fs::remove_dir_all(&dir).unwrap();
    }
    for i in 0..5 {
        assert!(finals[2][i] <= finals[0][i], "query {i}: L=3 final {} above L=1 {}", finals[2][i], finals[0][i]);
    }
    within(start.elapsed(), Duration::from_secs(600), "search-space trend");
}

// 7. Desk-scale performance.

fn desk_scale(work: &Path) {
    let pgd = generate_pgd(&GenParams::new(100_000, 7)).unwrap();
    let dir = work.join("scale");
    let start = Instant::now();
    let set = build_artifacts(&pgd, &BuildConfig::new(IndexParams { max_len: 2, beta: 0.1, gamma: 0.1 }), &dir).unwrap();
    within(start.elapsed(), Duration::from_secs(30 * 60), "L=2 build");
    for i in 0..3 {
        let q = generate_query(5, 9, &pgd.labels, 200 + i, 0.7).unwrap();
        let start = Instant::now();
        let one = set
            .engine()
            .run(&q, &QueryOptions { threads: 1, ..QueryOptions::default() })
            .unwrap();
        within(start.elapsed(), Duration::from_secs(60), "q(5,9)");
        let many = set
            .engine()
            .run(&q, &QueryOptions { threads: 4, ..QueryOptions::default() })
            .unwrap();
        assert_eq!(one.matches, many.matches, "thread counts disagree on query {i}");
    }
    drop(set);
    std::fs::remove_dir_all(&dir).unwrap();
}

// 8. Persistence.

fn persistence(work: &Path) {
    let mut p = GenParams::new(5000, 8);
    p.n_labels = 5;
    let pgd = generate_pgd(&p).unwrap();
    let dir = work.join("persist");
    let params = IndexParams { max_len: 2, beta: 0.1, gamma: 0.1 };
    let built = build_artifacts(&pgd, &BuildConfig::new(params), &dir).unwrap();
    let memory = pegraph::index::build_path_index(&built.graph, params).unwrap();
    let opened = open_artifacts(&dir).unwrap();
    assert_eq!(opened.graph, built.graph);
    assert_eq!(opened.context, built.context);
    assert_eq!(opened.histogram, built.histogram);
    assert_eq!(index_records(&opened.index).unwrap(), index_records(&memory).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let nl = opened.graph.num_labels() as u16;
    for _ in 0..100 {
        let seq: Vec<u16> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..nl)).collect();
        let alpha = rng.gen_range(0.1..=1.0);
        let before = memory.lookup(&seq, alpha).unwrap();
        let after = opened.index.lookup(&seq, alpha).unwrap();
        assert_eq!(before, after, "lookup {seq:?} at {alpha}");
    }
}

#[test]
fn acceptance() {
    let work = tempfile::tempdir().unwrap();
    let w = work.path();
    let criteria: Vec<(&str, Box<dyn Fn()>)> = vec![
        ("1 running example reproduction", Box::new(running_example)),
        ("2 oracle equivalence", Box::new(oracle_equivalence)),
        ("3 index exactness", Box::new(index_exactness)),
        ("4 stage soundness", Box::new(stage_soundness)),
        ("5 k-partite bounds and confluence", Box::new(kpartite_bounds)),
        ("6 search-space trend", Box::new(|| search_space_trend(w))),
        ("7 desk-scale performance", Box::new(|| desk_scale(w))),
        ("8 persistence", Box::new(|| persistence(w))),
    ];
    let mut failed = Vec::new();
    for (name, run) in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => report(&format!("acceptance criterion {name}: PASS ({secs:.1}s)")),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                report(&format!("acceptance criterion {name}: FAIL ({secs:.1}s) {msg}"));
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
