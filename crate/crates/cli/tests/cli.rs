use std::path::Path;
use std::process::{Command, Output};

use pegraph::model::fixtures;
use serde_json::Value;

fn pegraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pegraph"))
        .args(args)
        .env_remove("PEGRAPH_ARTIFACTS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = pegraph(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails_with(args: &[&str], code: i32, kind: &str) {
    let out = pegraph(args);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {stderr}");
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with(&format!("pegraph: error[{kind}]: ")), "{stderr}");
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn running_example_files(dir: &Path) -> (String, String) {
    let pgd = dir.join("pgd.json");
    fixtures::running_example().save(&pgd).unwrap();
    let query = dir.join("query.json");
    std::fs::write(&query, fixtures::RUNNING_QUERY).unwrap();
    (s(&pgd).to_string(), s(&query).to_string())
}

#[test]
fn query_agrees_with_oracle_on_running_example() {
    let dir = tempfile::tempdir().unwrap();
    let (pgd, query) = running_example_files(dir.path());
    let art = dir.path().join("art");
    ok(&["build", &pgd, "--artifacts", s(&art), "-L", "2", "--beta", "0.05"]);
    for alpha in ["0.25", "0.05"] {
        let got: Value = serde_json::from_str(&ok(&["query", &query, "--artifacts", s(&art), "--alpha", alpha])).unwrap();
        let want: Value = serde_json::from_str(&ok(&["oracle", &pgd, &query, "--alpha", alpha])).unwrap();
        let (got, want) = (got.as_array().unwrap(), want.as_array().unwrap());
        assert_eq!(got.len(), want.len(), "alpha {alpha}");
        for (g, w) in got.iter().zip(want) {
            assert_eq!(g["mapping"], w["mapping"]);
            let (pg, pw) = (g["probability"].as_f64().unwrap(), w["probability"].as_f64().unwrap());
            assert!((pg - pw).abs() < 1e-9);
        }
        if alpha == "0.05" {
            assert!(got.iter().any(|m| m["mapping"] == serde_json::json!({"A": "s3", "B": "s2", "C": "s4"})
                && (m["probability"].as_f64().unwrap() - 0.1).abs() < 1e-9));
        }
    }
    let csv = ok(&["query", &query, "--artifacts", s(&art), "--format", "csv"]);
    assert!(csv.starts_with("A,B,C,pr_le,pr_n,probability\n"));
}

#[test]
fn builds_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let pgd = dir.path().join("pgd.json");
    ok(&["generate", "--refs", "2000", "--labels", "4", "--seed", "9", "-o", s(&pgd)]);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["build", s(&pgd), "--artifacts", s(&a), "-L", "2", "--threads", "1"]);
    ok(&["build", s(&pgd), "--artifacts", s(&b), "-L", "2", "--threads", "3"]);
    for sub in ["graph", "context", "index", "histogram"] {
        for entry in std::fs::read_dir(a.join(sub)).unwrap() {
            let name = entry.unwrap().file_name();
            let x = std::fs::read(a.join(sub).join(&name)).unwrap();
            let y = std::fs::read(b.join(sub).join(&name)).unwrap();
            assert!(x == y, "{sub}/{name:?} differs");
        }
    }
    let stats: Value = serde_json::from_str(&ok(&["stats", "--artifacts", s(&a)])).unwrap();
    assert_eq!(stats.as_array().unwrap().len(), 4);
    assert_eq!(stats[2]["max_len"], 2);

    let q = dir.path().join("q.json");
    ok(&["generate-query", "--nodes", "4", "--edges", "4", "--pgd", s(&pgd), "--alpha", "0.2", "--seed", "4", "-o", s(&q)]);
    let one = ok(&["query", s(&q), "--artifacts", s(&a), "--threads", "1"]);
    let many = ok(&["query", s(&q), "--artifacts", s(&a), "--threads", "4"]);
    assert_eq!(one, many);
}

#[test]
fn bench_stage_sizes_shrink() {
    let dir = tempfile::tempdir().unwrap();
    let pgd = dir.path().join("pgd.json");
    ok(&["generate", "--refs", "3000", "--labels", "5", "--seed", "2", "-o", s(&pgd)]);
    let mut dirs = Vec::new();
    for l in ["1", "2"] {
        let art = dir.path().join(format!("art{l}"));
        ok(&["build", s(&pgd), "--artifacts", s(&art), "-L", l]);
        dirs.push(s(&art).to_string());
    }
    let csv = ok(&["bench", "--artifacts", &dirs.join(","), "--queries", "4", "--alpha", "0.5"]);
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let v = |name: &str| rec[col(name)].parse::<f64>().unwrap();
        assert!(v("final") <= v("path_context") && v("path_context") <= v("path"), "{rec:?}");
        rows += 1;
    }
    assert_eq!(rows, 8);
}

#[test]
fn failures_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (pgd, query) = running_example_files(dir.path());
    let missing = dir.path().join("nope.json");
    fails_with(&["build", s(&missing), "--artifacts", s(&dir.path().join("x"))], 3, "missing-file");
    fails_with(&["stats", "--artifacts", s(&dir.path().join("x"))], 3, "missing-file");
    fails_with(&["generate-query", "--nodes", "4", "--edges", "7", "--labels", "a"], 5, "invalid-parameter");
    fails_with(&["build", &pgd, "--artifacts", s(&dir.path().join("y")), "--beta", "1.5"], 5, "invalid-parameter");

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"nodes":[{"id":"A","label":"r"}],"edges":[["A","Z"]],"alpha":0.5}"#).unwrap();
    let art = dir.path().join("art");
    ok(&["build", &pgd, "--artifacts", s(&art), "-L", "1"]);
    fails_with(&["query", s(&bad), "--artifacts", s(&art)], 6, "invalid-query");

    let manifest = art.join("index").join("manifest.json");
    std::fs::write(&manifest, "{ not json").unwrap();
    fails_with(&["query", &query, "--artifacts", s(&art)], 4, "corrupt");

    // The index only holds paths of length 1; a three-node path needs 2.
    let art1 = dir.path().join("art1");
    ok(&["build", &pgd, "--artifacts", s(&art1), "-L", "1"]);
    let out = ok(&["query", &query, "--artifacts", s(&art1), "--alpha", "0.05"]);
    assert!(out.contains("s3"));
}

#[test]
fn artifacts_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (pgd, query) = running_example_files(dir.path());
    let art = dir.path().join("art");
    ok(&["build", &pgd, "--artifacts", s(&art)]);
    let out = Command::new(env!("CARGO_BIN_EXE_pegraph"))
        .args(["query", &query])
        .env("PEGRAPH_ARTIFACTS", &art)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
