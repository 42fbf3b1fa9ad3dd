mod common;

use common::{answer_mismatches, artifacts, small_pgd, small_query};
use pegraph::index::IndexParams;
use pegraph::model::{fixtures, oracle_subgraph_match, oracle_subgraph_match_exhaustive};
use pegraph::query::{Engine, QueryGraph, QueryOptions, Reduction};

fn check_case(seed: u64, correlated: bool, max_len: usize) -> usize {
    let mut found = 0;
    let pgd = small_pgd(seed, correlated);
    let a = artifacts(&pgd, IndexParams { max_len, beta: 0.1, gamma: 0.1 });
    let engine = Engine::new(&a.graph, &a.index, &a.context, &a.histogram);
    for (i, alpha) in [0.05, 0.3, 0.7].into_iter().enumerate() {
        let q = small_query(seed * 7 + i as u64, &pgd.labels, alpha);
        let want = oracle_subgraph_match(&pgd, &q, alpha).unwrap();
        found += want.len();
        for reduction in [Reduction::Joint, Reduction::None] {
            let opts = QueryOptions {
                threads: 1,
                reduction,
                keep_stages: false,
            };
            let got: Vec<_> = engine
                .run(&q, &opts)
                .unwrap()
                .matches
                .iter()
                .map(|m| m.named(&a.graph))
                .collect();
            let diff = answer_mismatches(&got, &want, alpha);
            assert!(
                diff.is_empty(),
                "seed {seed} correlated {correlated} L={max_len} alpha {alpha} {reduction:?}\nquery {}\n{diff:#?}",
                q.to_json().unwrap()
            );
        }
    }
    found
}

#[test]
fn independent_edges_match_oracle() {
    let found: usize = (0..60).map(|s| check_case(s, false, 1 + (s as usize % 3))).sum();
    // Guard against a generator that only produces empty answers.
    eprintln!("oracle matches: {found}");
    assert!(found > 100, "only {found} oracle matches");
}

#[test]
fn conditional_edges_match_oracle() {
    let found: usize = (1000..1060).map(|s| check_case(s, true, 1 + (s as usize % 3))).sum();
    eprintln!("oracle matches: {found}");
    assert!(found > 100, "only {found} oracle matches");
}

#[test]
fn running_example_answer() {
    let pgd = fixtures::running_example();
    let a = artifacts(&pgd, IndexParams { max_len: 2, beta: 0.05, gamma: 0.1 });
    let q = QueryGraph::from_json(fixtures::RUNNING_QUERY).unwrap();
    let engine = Engine::new(&a.graph, &a.index, &a.context, &a.histogram);
    let got: Vec<_> = engine.answer(&q).unwrap().iter().map(|m| m.named(&a.graph)).collect();
    let hit = got
        .iter()
        .find(|m| m.mapping == ["s3", "s2", "s4"])
        .expect("merged-free match present");
    assert!((hit.probability - 0.1).abs() < 1e-9);
    let want = oracle_subgraph_match(&pgd, &q, q.alpha).unwrap();
    assert!(answer_mismatches(&got, &want, q.alpha).is_empty());
    let exhaustive = oracle_subgraph_match_exhaustive(&pgd, &q, q.alpha, 1 << 20).unwrap();
    assert!(answer_mismatches(&got, &exhaustive, q.alpha).is_empty());
}

#[test]
fn unknown_label_yields_nothing() {
    let pgd = fixtures::running_example();
    let a = artifacts(&pgd, IndexParams::default());
    let q = QueryGraph::from_json(
        r#"{"nodes":[{"id":"A","label":"zzz"},{"id":"B","label":"a"}],"edges":[["A","B"]],"alpha":0.1}"#,
    )
    .unwrap();
    let engine = Engine::new(&a.graph, &a.index, &a.context, &a.histogram);
    assert!(engine.answer(&q).unwrap().is_empty());
}
