//! `pegraph` command-line tool: generate synthetic data, build artifacts,
//! answer threshold queries, compare against the possible-worlds oracle and
//! benchmark pruning stages.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pegraph::datagen::{generate_pgd, generate_query, GenParams};
use pegraph::index::IndexParams;
use pegraph::model::{oracle_subgraph_match, sort_named_matches, validate_pgd, NamedMatch, Pgd};
use pegraph::query::{QueryGraph, QueryOptions};
use pegraph::storage::{
    artifact_manifests, build_artifacts, open_artifacts, results_csv, results_json, BuildConfig,
    ResultFormat,
};
use pegraph::{Error, Result};

#[derive(Parser)]
#[command(name = "pegraph", version, about = "Threshold subgraph matching over uncertain graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic PGD document.
    Generate(GenerateArgs),
    /// Write a random connected query.
    GenerateQuery(GenerateQueryArgs),
    /// Build the entity graph, context tables, path index and histograms.
    Build(BuildArgs),
    /// Answer a query from built artifacts.
    Query(QueryArgs),
    /// Answer a query by possible-world semantics directly on a small PGD.
    Oracle(OracleArgs),
    /// Report per-stage search-space sizes and timings for random queries.
    Bench(BenchArgs),
    /// Summarize the manifests of an artifact directory.
    Stats(StatsArgs),
}

#[derive(Args)]
struct ArtifactDir {
    /// Artifact directory.
    #[arg(long, env = "PEGRAPH_ARTIFACTS")]
    artifacts: PathBuf,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: ResultFormat,
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of references.
    #[arg(long)]
    refs: usize,
    /// Number of edges; five per reference by default.
    #[arg(long)]
    edges: Option<usize>,
    #[arg(long, default_value_t = 10)]
    labels: usize,
    /// Fraction of references, edges and sets that are uncertain.
    #[arg(long, default_value_t = 0.2)]
    uncertainty: f64,
    /// Number of groups; one per thousand references by default.
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long, default_value_t = 4)]
    group_size: usize,
    /// Candidate pairs per group.
    #[arg(long, default_value_t = 2)]
    pairs: usize,
    /// Label-conditioned edge tables instead of scalar probabilities.
    #[arg(long)]
    correlated: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct GenerateQueryArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    edges: usize,
    /// PGD whose label alphabet the query draws from.
    #[arg(long, conflicts_with = "labels")]
    pgd: Option<PathBuf>,
    /// Comma-separated label alphabet.
    #[arg(long, value_delimiter = ',')]
    labels: Vec<String>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct IndexArgs {
    /// Longest indexed path, in edges.
    #[arg(short = 'L', long = "max-path-length", default_value_t = 3)]
    max_len: usize,
    /// Build threshold.
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// Bucket width.
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
}

#[derive(Args)]
struct BuildArgs {
    pgd: PathBuf,
    #[command(flatten)]
    dir: ArtifactDir,
    #[command(flatten)]
    index: IndexArgs,
    /// Worker threads; all cores by default.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct QueryArgs {
    query: PathBuf,
    #[command(flatten)]
    dir: ArtifactDir,
    /// Overrides the threshold in the query document.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct OracleArgs {
    pgd: PathBuf,
    query: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Artifact directories to compare, e.g. one per path length.
    #[arg(long = "artifacts", env = "PEGRAPH_ARTIFACTS", value_delimiter = ',', required = true)]
    artifacts: Vec<PathBuf>,
    /// Number of random queries.
    #[arg(long, default_value_t = 5)]
    queries: usize,
    #[arg(long, default_value_t = 5)]
    nodes: usize,
    #[arg(long, default_value_t = 7)]
    edges: usize,
    #[arg(long, default_value_t = 0.7)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    dir: ArtifactDir,
}

fn parse_format(s: &str) -> std::result::Result<ResultFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| if text.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") })
                .map_err(|e| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                })
        }
    }
}

fn render(q: &QueryGraph, matches: &[NamedMatch], format: ResultFormat) -> Result<String> {
    match format {
        ResultFormat::Json => results_json(q, matches),
        ResultFormat::Csv => results_csv(q, matches),
    }
}

fn load_query(path: &Path, alpha: Option<f64>) -> Result<QueryGraph> {
    let q = QueryGraph::load(path)?;
    match alpha {
        Some(a) => q.with_alpha(a),
        None => Ok(q),
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let mut p = GenParams::new(a.refs, a.seed);
    if let Some(e) = a.edges {
        p.n_edges = e;
    }
    if let Some(g) = a.groups {
        p.groups = g;
    }
    p.n_labels = a.labels;
    p.uncertain_fraction = a.uncertainty;
    p.group_size = a.group_size;
    p.pairs_per_group = a.pairs;
    p.correlated = a.correlated;
    let pgd = generate_pgd(&p)?;
    pgd.save(&a.output)
}

fn cmd_generate_query(a: GenerateQueryArgs) -> Result<()> {
    let labels = match &a.pgd {
        Some(path) => Pgd::load(path)?.labels,
        None => a.labels.clone(),
    };
    let q = generate_query(a.nodes, a.edges, &labels, a.seed, a.alpha)?;
    emit(a.output.as_deref(), &q.to_json()?)
}

fn cmd_build(a: BuildArgs) -> Result<()> {
    let params = IndexParams {
        max_len: a.index.max_len,
        beta: a.index.beta,
        gamma: a.index.gamma,
    };
    params.validate()?;
    let pgd = Pgd::load(&a.pgd)?;
    let mut config = BuildConfig::new(params);
    config.threads = a.threads;
    let set = build_artifacts(&pgd, &config, &a.dir.artifacts)?;
    eprintln!(
        "pegraph: built {} entities, {} edges, {} path records in {}",
        set.graph.num_nodes(),
        set.graph.edges.len(),
        set.index.record_count(),
        a.dir.artifacts.display()
    );
    Ok(())
}

fn cmd_query(a: QueryArgs) -> Result<()> {
    let q = load_query(&a.query, a.alpha)?;
    let set = open_artifacts(&a.dir.artifacts)?;
    let opts = QueryOptions {
        threads: a.threads,
        ..QueryOptions::default()
    };
    let run = set.engine().run(&q, &opts)?;
    let named: Vec<NamedMatch> = run.matches.iter().map(|m| m.named(&set.graph)).collect();
    emit(a.out.output.as_deref(), &render(&q, &named, a.out.format)?)
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let pgd = Pgd::load(&a.pgd)?;
    validate_pgd(&pgd).into_result()?;
    let q = load_query(&a.query, a.alpha)?;
    let mut matches = oracle_subgraph_match(&pgd, &q, q.alpha)?;
    sort_named_matches(&mut matches);
    emit(a.out.output.as_deref(), &render(&q, &matches, a.out.format)?)
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "artifacts",
        "max_len",
        "query",
        "nodes",
        "edges",
        "alpha",
        "path",
        "path_context",
        "final",
        "log10_path",
        "log10_path_context",
        "log10_final",
        "matches",
        "decompose_ms",
        "candidates_ms",
        "join_ms",
        "reduce_ms",
        "enumerate_ms",
        "total_ms",
    ])
    .map_err(Error::from)?;
    let opts = QueryOptions {
        threads: a.threads,
        ..QueryOptions::default()
    };
    for dir in &a.artifacts {
        let set = open_artifacts(dir)?;
        for i in 0..a.queries {
            let q = generate_query(a.nodes, a.edges, &set.graph.labels, a.seed + i as u64, a.alpha)?;
            let run = set.engine().run(&q, &opts)?;
            let s = run.sizes;
            let t = run.timings;
            let ms = |d: std::time::Duration| format!("{:.3}", d.as_secs_f64() * 1e3);
            let [lp, lc, lf] = s.log10();
            w.write_record([
                dir.display().to_string(),
                set.index.params().max_len.to_string(),
                i.to_string(),
                a.nodes.to_string(),
                a.edges.to_string(),
                a.alpha.to_string(),
                s.path.to_string(),
                s.path_context.to_string(),
                s.reduced.to_string(),
                format!("{lp:.4}"),
                format!("{lc:.4}"),
                format!("{lf:.4}"),
                run.matches.len().to_string(),
                ms(t.decompose),
                ms(t.candidates),
                ms(t.join),
                ms(t.reduce),
                ms(t.enumerate),
                ms(t.total()),
            ])
            .map_err(Error::from)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    emit(a.output.as_deref(), &String::from_utf8_lossy(&bytes))
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let manifests = artifact_manifests(&a.dir.artifacts)?;
    emit(None, &serde_json::to_string_pretty(&manifests)?)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::MissingFile(_) => 3,
        Error::Incompatible(_) | Error::Corrupt { .. } => 4,
        Error::InvalidParameter(_)
        | Error::PathTooLong { .. }
        | Error::BelowBuildThreshold { .. }
        | Error::EnumerationCap { .. }
        | Error::ComponentTooLarge { .. } => 5,
        Error::InvalidPgd(_)
        | Error::InvalidQuery(_)
        | Error::DegenerateComponent { .. }
        | Error::UnknownEntity(_)
        | Error::Json(_)
        | Error::Csv(_) => 6,
        Error::Io { .. } => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::GenerateQuery(a) => cmd_generate_query(a),
        Command::Build(a) => cmd_build(a),
        Command::Query(a) => cmd_query(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Stats(a) => cmd_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("pegraph: error[{}]: {msg}", e.kind());
            ExitCode::from(exit_code(&e))
        }
    }
}
