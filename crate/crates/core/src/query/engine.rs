//! End-to-end query evaluation.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::index::{ContextTable, Histogram, PathIndex, PathRecord};
use crate::model::{EntityGraph, Match};
use crate::query::{
    build_kpartite, decompose_query, enumerate_matches, join_links, join_order, joint_reduce,
    joint_reduce_parallel, node_candidates, path_candidates, query_stats, reduce_structure,
    reduce_upperbounds, Decomposition, KPartite, QueryGraph, QueryStats,
};

/// Relative slack applied to thresholds of intermediate pruning so that
/// rounding in differently ordered products cannot drop a match sitting
/// exactly on the threshold. The final check uses the exact threshold.
pub const PRUNE_SLACK: f64 = 1e-9;

/// Which reductions run on the k-partite graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    None,
    Structure,
    Upperbounds,
    #[default]
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryOptions {
    /// Worker threads; 0 means all available cores. With one thread the
    /// joint reduction runs as a sequential work queue.
    pub threads: usize,
    pub reduction: Reduction,
    /// Keep the candidate sets of every stage in the result.
    pub keep_stages: bool,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            threads: 0,
            reduction: Reduction::Joint,
            keep_stages: false,
        }
    }
}

/// Products of per-path candidate counts after each pruning stage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageSizes {
    /// Raw index lookups.
    pub path: f64,
    /// After node-candidate and context pruning.
    pub path_context: f64,
    /// Survivors of k-partite reduction.
    pub reduced: f64,
}

impl StageSizes {
    pub fn log10(&self) -> [f64; 3] {
        [self.path.log10(), self.path_context.log10(), self.reduced.log10()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimings {
    pub decompose: Duration,
    pub candidates: Duration,
    pub join: Duration,
    pub reduce: Duration,
    pub enumerate: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.decompose + self.candidates + self.join + self.reduce + self.enumerate
    }
}

/// Intermediate state of an evaluation.
#[derive(Debug, Clone)]
pub struct Stages {
    pub decomposition: Decomposition,
    pub stats: QueryStats,
    pub node_candidates: Vec<Vec<bool>>,
    pub raw_counts: Vec<usize>,
    pub candidates: Vec<Vec<PathRecord>>,
    /// Before any reduction.
    pub initial: KPartite,
    pub reduced: KPartite,
    pub order: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct QueryRun {
    pub matches: Vec<Match>,
    pub sizes: StageSizes,
    pub timings: StageTimings,
    /// Absent when a query label is unknown to the graph (no matches).
    pub stages: Option<Stages>,
}

/// Borrowed offline artifacts needed to answer queries.
#[derive(Clone, Copy)]
pub struct Engine<'a> {
    pub graph: &'a EntityGraph,
    pub index: &'a PathIndex,
    pub context: &'a ContextTable,
    pub histogram: &'a Histogram,
}

impl<'a> Engine<'a> {
    pub fn new(
        graph: &'a EntityGraph,
        index: &'a PathIndex,
        context: &'a ContextTable,
        histogram: &'a Histogram,
    ) -> Self {
        Engine {
            graph,
            index,
            context,
            histogram,
        }
    }

    pub fn answer(&self, q: &QueryGraph) -> Result<Vec<Match>> {
        Ok(self.run(q, &QueryOptions::default())?.matches)
    }

    pub fn run(&self, q: &QueryGraph, opts: &QueryOptions) -> Result<QueryRun> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| self.run_in_pool(q, opts))
    }

    fn run_in_pool(&self, q: &QueryGraph, opts: &QueryOptions) -> Result<QueryRun> {
        let g = self.graph;
        if self.index.num_labels() != g.num_labels() || self.context.num_nodes() != g.num_nodes() {
            return Err(Error::Incompatible(
                "index or context tables were built for a different graph".into(),
            ));
        }
        let mut timings = StageTimings::default();
        let Some(labels) = q.label_ids(g) else {
            return Ok(QueryRun {
                matches: Vec::new(),
                sizes: StageSizes::default(),
                timings,
                stages: None,
            });
        };
        let alpha = q.alpha;
        let prune = alpha * (1.0 - PRUNE_SLACK);
        let beta = self.index.params().beta;
        // The index holds everything at or above beta; only thresholds truly
        // below it need traversal.
        let lookup = if alpha >= beta { prune.max(beta) } else { prune };

        let t = Instant::now();
        let d = decompose_query(q, &labels, self.index.params().max_len, self.histogram)?;
        let stats = query_stats(q, &labels, g.num_labels(), &d);
        timings.decompose = t.elapsed();

        let t = Instant::now();
        let cn = node_candidates(g, self.context, &labels, &stats, prune);
        let found: Vec<_> = (0..d.len())
            .into_par_iter()
            .map(|p| {
                path_candidates(
                    g,
                    self.index,
                    self.context,
                    &labels,
                    &d.paths[p],
                    &stats.paths[p],
                    &cn,
                    lookup,
                    prune,
                )
            })
            .collect::<Result<_>>()?;
        let raw_counts: Vec<usize> = found.iter().map(|f| f.raw).collect();
        let cands: Vec<Vec<PathRecord>> = found.into_iter().map(|f| f.records).collect();
        timings.candidates = t.elapsed();

        let t = Instant::now();
        let links = join_links(g, &labels, &d, &cands, prune);
        let initial = build_kpartite(g, &labels, &d, &cands, links);
        timings.join = t.elapsed();

        let t = Instant::now();
        let mut reduced = initial.clone();
        match opts.reduction {
            Reduction::None => {}
            Reduction::Structure => reduce_structure(&mut reduced),
            Reduction::Upperbounds => reduce_upperbounds(&mut reduced, prune),
            Reduction::Joint if opts.threads == 1 => joint_reduce(&mut reduced, prune),
            Reduction::Joint => joint_reduce_parallel(&mut reduced, prune),
        }
        timings.reduce = t.elapsed();

        let t = Instant::now();
        let order = join_order(&d);
        let matches = enumerate_matches(g, q, &labels, &d, &reduced, &cands, &order, prune);
        timings.enumerate = t.elapsed();

        let sizes = StageSizes {
            path: raw_counts.iter().map(|&c| c as f64).product(),
            path_context: cands.iter().map(|c| c.len() as f64).product(),
            reduced: reduced.alive_counts().iter().map(|&c| c as f64).product(),
        };
        let stages = opts.keep_stages.then(|| Stages {
            decomposition: d,
            stats,
            node_candidates: cn,
            raw_counts,
            candidates: cands,
            initial,
            reduced,
            order,
        });
        Ok(QueryRun {
            matches,
            sizes,
            timings,
            stages,
        })
    }
}

/// All matches of `q` with probability at least its threshold, most probable
/// first.
pub fn answer_query(
    g: &EntityGraph,
    idx: &PathIndex,
    ctx: &ContextTable,
    h: &Histogram,
    q: &QueryGraph,
) -> Result<Vec<Match>> {
    Engine::new(g, idx, ctx, h).answer(q)
}
