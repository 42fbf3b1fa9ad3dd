//! Small hand-built PGDs shared by tests, examples and the CLI.

use super::pgd::{EdgeDoc, MergeSpec, Pgd, ReferenceDoc, SetDoc};

fn reference(id: &str, dist: &[(&str, f64)]) -> ReferenceDoc {
    ReferenceDoc {
        id: id.into(),
        dist: dist.iter().map(|(l, p)| (l.to_string(), *p)).collect(),
    }
}

fn edge(u: &str, v: &str, p: f64) -> EdgeDoc {
    EdgeDoc {
        u: u.into(),
        v: v.into(),
        p: Some(p),
        cpt: None,
    }
}

fn set(id: &str, refs: &[&str], p: Option<f64>) -> SetDoc {
    SetDoc {
        id: id.into(),
        refs: refs.iter().map(|r| r.to_string()).collect(),
        p,
    }
}

/// Four expert references with affiliations academia (a), research lab (r)
/// and industry (i). `r3` and `r4` may be the same person (set `s34`, 0.8).
pub fn running_example() -> Pgd {
    Pgd {
        labels: vec!["a".into(), "r".into(), "i".into()],
        references: vec![
            reference("r1", &[("i", 0.75), ("r", 0.25)]),
            reference("r2", &[("a", 1.0)]),
            reference("r3", &[("r", 1.0)]),
            reference("r4", &[("i", 1.0)]),
        ],
        edges: vec![edge("r3", "r2", 1.0), edge("r2", "r4", 0.5)],
        sets: vec![
            set("s34", &["r3", "r4"], Some(0.8)),
            set("s1", &["r1"], None),
            set("s2", &["r2"], None),
            set("s3", &["r3"], None),
            set("s4", &["r4"], None),
        ],
        merge: MergeSpec::default(),
    }
}

/// Query document for the path `r - a - i` over the running example.
pub const RUNNING_QUERY: &str = r#"{"nodes":[{"id":"A","label":"r"},{"id":"B","label":"a"},{"id":"C","label":"i"}],
"edges":[["A","B"],["B","C"]],"alpha":0.05}"#;
