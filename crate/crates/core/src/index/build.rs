//! Level-by-level path index construction.
//!
//! Records of length `l + 1` are produced by extending length-`l` records by
//! one edge. Every prefix of a qualifying path qualifies itself (all factors
//! are at most one), so extending only the records kept at the previous level
//! loses nothing. Label sequences of one length are processed in parallel;
//! results are written sequentially in key order.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use super::path::{canonical, is_palindrome, IndexParams, PathRecord};
use super::segment::{Segment, SegmentWriter};
use super::PathIndex;
use crate::error::{Error, Result};
use crate::model::{EntityGraph, LabelId, NodeId};

/// Default size of the write buffer.
pub const DEFAULT_BUFFER_BYTES: usize = 64 << 20;

/// Label sequences handed to the worker pool at a time.
const CHUNK_KEYS: usize = 256;

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub params: IndexParams,
    /// Worker threads; 0 means all available cores.
    pub threads: usize,
    pub buffer_bytes: usize,
}

impl BuildOptions {
    pub fn new(params: IndexParams) -> Self {
        BuildOptions {
            params,
            threads: 0,
            buffer_bytes: DEFAULT_BUFFER_BYTES,
        }
    }
}

/// For every node and label, the neighbors carrying that label in their
/// support, with the connecting edge.
pub(crate) struct LabelAdjacency {
    num_labels: usize,
    offsets: Vec<u32>,
    entries: Vec<(NodeId, u32)>,
}

impl LabelAdjacency {
    pub(crate) fn new(g: &EntityGraph) -> Self {
        let nl = g.num_labels();
        let mut offsets = Vec::with_capacity(g.num_nodes() * nl + 1);
        let mut entries = Vec::new();
        offsets.push(0);
        for v in 0..g.num_nodes() as NodeId {
            for l in 0..nl as LabelId {
                for &(w, e) in g.neighbors(v) {
                    if g.label_prob(w, l) > 0.0 {
                        entries.push((w, e));
                    }
                }
                offsets.push(entries.len() as u32);
            }
        }
        LabelAdjacency {
            num_labels: nl,
            offsets,
            entries,
        }
    }

    pub(crate) fn get(&self, v: NodeId, l: LabelId) -> &[(NodeId, u32)] {
        let i = v as usize * self.num_labels + l as usize;
        &self.entries[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

/// Records of one label sequence, stored flat.
#[derive(Default)]
struct Block {
    width: usize,
    nodes: Vec<NodeId>,
    pr_le: Vec<f64>,
    pr_n: Vec<f64>,
}

impl Block {
    fn len(&self) -> usize {
        self.pr_le.len()
    }

    fn path(&self, i: usize) -> &[NodeId] {
        &self.nodes[i * self.width..(i + 1) * self.width]
    }
}

/// Extends `nodes` by `w` and returns `(pr_le, pr_n)` when the result
/// reaches `threshold`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn extend_path(
    g: &EntityGraph,
    nodes: &[NodeId],
    pr_le: f64,
    pr_n: f64,
    last_label: LabelId,
    w: NodeId,
    edge: u32,
    label: LabelId,
    threshold: f64,
) -> Option<(f64, f64)> {
    if nodes.contains(&w) {
        return None;
    }
    let mut shared_component = false;
    for &u in nodes {
        if !g.refs_disjoint(u, w) {
            return None;
        }
        shared_component |= g.component_of(u) == g.component_of(w);
    }
    let last = *nodes.last().expect("non-empty path");
    let e = &g.edges[edge as usize];
    let le = pr_le * g.label_prob(w, label) * g.edge_entry(e, last, last_label, label);
    if le * pr_n < threshold {
        return None;
    }
    let n = if shared_component {
        let mut all = nodes.to_vec();
        all.push(w);
        g.node_existence_marginal(&all)
    } else {
        pr_n * g.existence(w)
    };
    (le * n >= threshold).then_some((le, n))
}

fn level_zero(g: &EntityGraph, beta: f64) -> BTreeMap<Vec<LabelId>, Block> {
    let mut blocks: BTreeMap<Vec<LabelId>, Block> = BTreeMap::new();
    for v in 0..g.num_nodes() as NodeId {
        let n = g.existence(v);
        for l in g.node(v).possible_labels() {
            let le = g.label_prob(v, l);
            if le * n >= beta {
                let b = blocks.entry(vec![l]).or_insert_with(|| Block {
                    width: 1,
                    ..Default::default()
                });
                b.nodes.push(v);
                b.pr_le.push(le);
                b.pr_n.push(n);
            }
        }
    }
    blocks
}

/// Builds all records for canonical sequence `seq` from the previous level.
fn extend_sequence(
    g: &EntityGraph,
    adj: &LabelAdjacency,
    prev: &BTreeMap<Vec<LabelId>, Block>,
    seq: &[LabelId],
    beta: f64,
) -> Block {
    let width = seq.len();
    let prefix = &seq[..width - 1];
    let canon_prefix = canonical(prefix);
    let mut out = Block {
        width,
        ..Default::default()
    };
    let Some(block) = prev.get(&canon_prefix) else {
        return out;
    };
    let label = seq[width - 1];
    let last_label = seq[width - 2];
    let palindrome = is_palindrome(seq);
    let mut orientations = Vec::with_capacity(2);
    if canon_prefix.as_slice() == prefix {
        orientations.push(false);
    }
    if canon_prefix.as_slice() != prefix || (is_palindrome(prefix) && prefix.len() > 1) {
        orientations.push(true);
    }
    let mut path = Vec::with_capacity(width);
    for i in 0..block.len() {
        for &reverse in &orientations {
            path.clear();
            path.extend_from_slice(block.path(i));
            if reverse {
                path.reverse();
            }
            let last = *path.last().expect("non-empty");
            for &(w, e) in adj.get(last, label) {
                if palindrome && path[0] > w {
                    continue;
                }
                if let Some((le, n)) =
                    extend_path(g, &path, block.pr_le[i], block.pr_n[i], last_label, w, e, label, beta)
                {
                    out.nodes.extend_from_slice(&path);
                    out.nodes.push(w);
                    out.pr_le.push(le);
                    out.pr_n.push(n);
                }
            }
        }
    }
    out
}

fn candidate_sequences(prev: &BTreeMap<Vec<LabelId>, Block>, num_labels: usize) -> Vec<Vec<LabelId>> {
    let mut out = BTreeSet::new();
    for key in prev.keys() {
        let rev: Vec<LabelId> = key.iter().rev().copied().collect();
        for dir in [key.clone(), rev] {
            for l in 0..num_labels as LabelId {
                let mut s = dir.clone();
                s.push(l);
                out.insert(canonical(&s));
            }
        }
    }
    out.into_iter().collect()
}

fn sorted_records(params: &IndexParams, block: &Block) -> Vec<(u16, PathRecord)> {
    let mut recs: Vec<(u16, PathRecord)> = (0..block.len())
        .map(|i| {
            let rec = PathRecord {
                nodes: block.path(i).to_vec(),
                pr_le: block.pr_le[i],
                pr_n: block.pr_n[i],
            };
            (params.bucket_of(rec.probability()), rec)
        })
        .collect();
    recs.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.nodes.cmp(&b.1.nodes)));
    recs
}

fn run_build<W: Write>(g: &EntityGraph, opts: &BuildOptions, out: W) -> Result<(W, super::segment::Directory, u64)> {
    let params = opts.params;
    params.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let io_err = |e| Error::io("<index segment>", e);
    let adj = LabelAdjacency::new(g);
    let mut writer = SegmentWriter::new(out, params, g.num_labels()).map_err(io_err)?;

    let mut frontier = level_zero(g, params.beta);
    for (seq, block) in &frontier {
        writer
            .write_sequence(seq, &sorted_records(&params, block))
            .map_err(io_err)?;
    }
    for len in 1..=params.max_len {
        let keys = candidate_sequences(&frontier, g.num_labels());
        let keep = len < params.max_len;
        let mut next = BTreeMap::new();
        for chunk in keys.chunks(CHUNK_KEYS) {
            let blocks: Vec<(Block, Vec<(u16, PathRecord)>)> = pool.install(|| {
                chunk
                    .par_iter()
                    .map(|seq| {
                        let block = extend_sequence(g, &adj, &frontier, seq, params.beta);
                        let recs = sorted_records(&params, &block);
                        (block, recs)
                    })
                    .collect()
            });
            for (seq, (block, recs)) in chunk.iter().zip(blocks) {
                writer.write_sequence(seq, &recs).map_err(io_err)?;
                if keep && block.len() > 0 {
                    next.insert(seq.clone(), block);
                }
            }
        }
        frontier = next;
    }
    writer.finish().map_err(io_err)
}

/// Builds an in-memory index.
pub fn build_path_index(g: &EntityGraph, params: IndexParams) -> Result<PathIndex> {
    build_path_index_with(g, &BuildOptions::new(params))
}

pub fn build_path_index_with(g: &EntityGraph, opts: &BuildOptions) -> Result<PathIndex> {
    let (bytes, directory, records) = run_build(g, opts, Vec::new())?;
    Ok(PathIndex {
        params: opts.params,
        num_labels: g.num_labels(),
        segment: Segment::Memory(bytes),
        directory,
        records,
    })
}

/// Builds the index straight into a segment file and opens it.
pub fn build_path_index_to_file(g: &EntityGraph, opts: &BuildOptions, path: &Path) -> Result<PathIndex> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let out = BufWriter::with_capacity(opts.buffer_bytes.max(4096), file);
    let (out, _, _) = run_build(g, opts, out)?;
    let file = out
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    file.sync_all().map_err(|e| Error::io(path, e))?;
    drop(file);
    PathIndex::open(path)
}
