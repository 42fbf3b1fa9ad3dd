mod common;

use common::index_mismatches;
use pegraph::datagen::{generate_pgd, GenParams};
use pegraph::index::{build_path_index, build_path_index_with, BuildOptions, IndexParams};
use pegraph::model::build_entity_graph;

fn graph(seed: u64, n: usize, correlated: bool) -> pegraph::model::EntityGraph {
    let mut p = GenParams::new(n, seed);
    p.n_edges = 2 * n;
    p.n_labels = 3;
    p.uncertain_fraction = 0.4;
    p.groups = n / 40;
    p.correlated = correlated;
    build_entity_graph(&generate_pgd(&p).unwrap()).unwrap()
}

#[test]
fn index_equals_brute_force_enumeration() {
    for seed in 0..8 {
        let g = graph(seed, 60 + 40 * seed as usize, seed % 2 == 1);
        let idx = build_path_index(&g, IndexParams { max_len: 3, beta: 0.1, gamma: 0.1 }).unwrap();
        let errors = index_mismatches(&g, &idx);
        assert!(errors.is_empty(), "seed {seed}: {:#?}", &errors[..errors.len().min(10)]);
    }
}

#[test]
fn small_pgds_index_exactly() {
    for seed in 0..40 {
        let pgd = common::small_pgd(seed, seed % 2 == 0);
        let g = build_entity_graph(&pgd).unwrap();
        for (beta, gamma) in [(0.1, 0.1), (0.05, 0.25)] {
            let idx = build_path_index(&g, IndexParams { max_len: 3, beta, gamma }).unwrap();
            let errors = index_mismatches(&g, &idx);
            assert!(errors.is_empty(), "seed {seed}: {errors:#?}");
        }
    }
}

#[test]
fn thread_count_does_not_change_the_index() {
    let g = graph(3, 400, false);
    let params = IndexParams { max_len: 3, beta: 0.1, gamma: 0.1 };
    let mut one = BuildOptions::new(params);
    one.threads = 1;
    let mut four = BuildOptions::new(params);
    four.threads = 4;
    let a = build_path_index_with(&g, &one).unwrap();
    let b = build_path_index_with(&g, &four).unwrap();
    assert_eq!(a.segment_bytes().unwrap(), b.segment_bytes().unwrap());
}
