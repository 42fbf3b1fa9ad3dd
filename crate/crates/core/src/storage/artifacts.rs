//! Artifact directories. Each artifact lives in its own directory holding a
//! `manifest.json` and one binary data file; an artifact set groups the
//! entity graph, context tables, path index and histograms built from one
//! PGD.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::codec::{Decoder, Encoder};
use crate::error::{Error, Result};
use crate::index::{
    build_histograms, build_path_index_to_file, compute_context, default_points, BuildOptions,
    ContextTable, Histogram, IndexParams, PathIndex, PathRecord,
};
use crate::model::{
    build_entity_graph, Config, EdgeExistence, EntityEdge, EntityGraph, EntityNode,
    IdentityComponent, Pgd,
};
use crate::query::Engine;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

const GRAPH_MAGIC: &[u8; 8] = b"UGPGRAPH";
const CONTEXT_MAGIC: &[u8; 8] = b"UGPCTX01";
const HISTOGRAM_MAGIC: &[u8; 8] = b"UGPHIST1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    EntityGraph,
    ContextTable,
    PathIndex,
    Histogram,
}

impl ArtifactKind {
    pub fn dir_name(self) -> &'static str {
        match self {
            ArtifactKind::EntityGraph => "graph",
            ArtifactKind::ContextTable => "context",
            ArtifactKind::PathIndex => "index",
            ArtifactKind::Histogram => "histogram",
        }
    }

    fn data_file(self) -> &'static str {
        match self {
            ArtifactKind::EntityGraph => "graph.bin",
            ArtifactKind::ContextTable => "context.bin",
            ArtifactKind::PathIndex => "paths.seg",
            ArtifactKind::Histogram => "histogram.bin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactManifest {
    pub kind: ArtifactKind,
    pub format_version: u32,
    /// SHA-256 of the source PGD document.
    pub source_fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    pub data_file: String,
    pub data_sha256: String,
    pub data_bytes: u64,
    pub records: u64,
}

impl ArtifactManifest {
    fn new(kind: ArtifactKind, fingerprint: &str) -> Self {
        ArtifactManifest {
            kind,
            format_version: FORMAT_VERSION,
            source_fingerprint: fingerprint.to_string(),
            max_len: None,
            beta: None,
            gamma: None,
            points: None,
            data_file: kind.data_file().to_string(),
            data_sha256: String::new(),
            data_bytes: 0,
            records: 0,
        }
    }

    pub fn index_params(&self) -> Option<IndexParams> {
        Some(IndexParams {
            max_len: self.max_len?,
            beta: self.beta?,
            gamma: self.gamma?,
        })
    }
}

/// SHA-256 of the PGD's canonical JSON form.
pub fn pgd_fingerprint(pgd: &Pgd) -> Result<String> {
    Ok(hex::encode(Sha256::digest(pgd.to_json()?.as_bytes())))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_manifest(dir: &Path, m: &ArtifactManifest) -> Result<()> {
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(m)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<ArtifactManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::corrupt(&path, e.to_string()))
}

/// Reads and checks a manifest against the expected kind and, when given,
/// the expected source fingerprint.
fn checked_manifest(dir: &Path, kind: ArtifactKind, fingerprint: Option<&str>) -> Result<ArtifactManifest> {
    let m = read_manifest(dir)?;
    let path = dir.join(MANIFEST_FILE);
    if m.kind != kind {
        return Err(Error::Incompatible(format!(
            "{} describes a {:?}, expected {:?}",
            path.display(),
            m.kind,
            kind
        )));
    }
    if m.format_version != FORMAT_VERSION {
        return Err(Error::Incompatible(format!(
            "{} has format version {}, expected {FORMAT_VERSION}",
            path.display(),
            m.format_version
        )));
    }
    if let Some(fp) = fingerprint {
        if m.source_fingerprint != fp {
            return Err(Error::Incompatible(format!(
                "{} was built from a different PGD",
                dir.display()
            )));
        }
    }
    if m.data_file.contains(['/', '\\']) || m.data_file.starts_with('.') {
        return Err(Error::corrupt(&path, "data file must be a plain file name"));
    }
    Ok(m)
}

fn write_data(dir: &Path, m: &mut ArtifactManifest, bytes: &[u8], records: u64) -> Result<()> {
    create_dir(dir)?;
    let path = dir.join(&m.data_file);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    m.data_sha256 = hex::encode(Sha256::digest(bytes));
    m.data_bytes = bytes.len() as u64;
    m.records = records;
    write_manifest(dir, m)
}

fn read_data(dir: &Path, m: &ArtifactManifest) -> Result<(PathBuf, Vec<u8>)> {
    let path = dir.join(&m.data_file);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    verify_digest(&path, m, &bytes)?;
    Ok((path, bytes))
}

fn verify_digest(path: &Path, m: &ArtifactManifest, bytes: &[u8]) -> Result<()> {
    if bytes.len() as u64 != m.data_bytes {
        return Err(Error::corrupt(
            path,
            format!("{} bytes on disk, manifest records {}", bytes.len(), m.data_bytes),
        ));
    }
    if hex::encode(Sha256::digest(bytes)) != m.data_sha256 {
        return Err(Error::corrupt(path, "content digest does not match the manifest"));
    }
    Ok(())
}

fn file_digest(path: &Path) -> Result<(String, u64)> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let n = std::io::copy(&mut file, &mut hasher).map_err(|e| Error::io(path, e))?;
    Ok((hex::encode(hasher.finalize()), n))
}

// Entity graph.

pub fn encode_entity_graph(g: &EntityGraph) -> Vec<u8> {
    let mut e = Encoder::new(GRAPH_MAGIC, FORMAT_VERSION);
    e.len(g.labels.len());
    for l in &g.labels {
        e.str(l);
    }
    e.len(g.references.len());
    for r in &g.references {
        e.str(r);
    }
    e.len(g.nodes.len());
    for n in &g.nodes {
        e.str(&n.id);
        e.u32s(&n.refs);
        e.f64s(&n.label_dist);
    }
    e.len(g.edges.len());
    for edge in &g.edges {
        e.u32(edge.a);
        e.u32(edge.b);
        match &edge.existence {
            EdgeExistence::Independent(p) => {
                e.u8(0);
                e.f64(*p);
            }
            EdgeExistence::Conditional(cpt) => {
                e.u8(1);
                e.f64s(cpt);
            }
        }
    }
    e.len(g.components.len());
    for c in &g.components {
        e.u32s(&c.nodes);
        e.len(c.configs.len());
        for cfg in &c.configs {
            e.u32(cfg.mask);
            e.f64(cfg.prob);
        }
        e.f64(c.normalizer);
    }
    e.buf
}

pub fn decode_entity_graph(bytes: &[u8], path: &Path) -> Result<EntityGraph> {
    let mut d = Decoder::new(bytes, path, GRAPH_MAGIC, FORMAT_VERSION)?;
    let n = d.len(4)?;
    let labels = (0..n).map(|_| d.str()).collect::<Result<Vec<_>>>()?;
    let n = d.len(4)?;
    let references = (0..n).map(|_| d.str()).collect::<Result<Vec<_>>>()?;
    let n = d.len(20)?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let id = d.str()?;
        let refs = d.u32s()?;
        let label_dist = d.f64s()?;
        if label_dist.len() != labels.len() || refs.iter().any(|&r| r as usize >= references.len()) {
            return Err(d.corrupt("entity out of range"));
        }
        nodes.push(EntityNode { id, refs, label_dist });
    }
    let n = d.len(17)?;
    let mut edges = Vec::with_capacity(n);
    for _ in 0..n {
        let a = d.u32()?;
        let b = d.u32()?;
        let existence = match d.u8()? {
            0 => EdgeExistence::Independent(d.f64()?),
            1 => {
                let cpt = d.f64s()?;
                if cpt.len() != labels.len() * labels.len() {
                    return Err(d.corrupt("edge table size"));
                }
                EdgeExistence::Conditional(cpt.into_boxed_slice())
            }
            _ => return Err(d.corrupt("unknown edge kind")),
        };
        if a >= b || b as usize >= nodes.len() {
            return Err(d.corrupt("edge endpoint out of range"));
        }
        edges.push(EntityEdge { a, b, existence });
    }
    let n = d.len(24)?;
    let mut components = Vec::with_capacity(n);
    for _ in 0..n {
        let members = d.u32s()?;
        if members.iter().any(|&v| v as usize >= nodes.len()) || members.len() > 32 {
            return Err(d.corrupt("component member out of range"));
        }
        let k = d.len(12)?;
        let mut configs = Vec::with_capacity(k);
        for _ in 0..k {
            let mask = d.u32()?;
            let prob = d.f64()?;
            configs.push(Config { mask, prob });
        }
        let normalizer = d.f64()?;
        components.push(IdentityComponent {
            nodes: members,
            configs,
            normalizer,
        });
    }
    let mut covered = vec![0u32; nodes.len()];
    for c in &components {
        for &v in &c.nodes {
            covered[v as usize] += 1;
        }
    }
    if covered.iter().any(|&c| c != 1) {
        return Err(d.corrupt("components do not partition the entities"));
    }
    d.finish()?;
    Ok(EntityGraph::from_parts(labels, references, nodes, edges, components))
}

pub fn save_entity_graph(dir: &Path, g: &EntityGraph, fingerprint: &str) -> Result<ArtifactManifest> {
    let mut m = ArtifactManifest::new(ArtifactKind::EntityGraph, fingerprint);
    write_data(dir, &mut m, &encode_entity_graph(g), g.num_nodes() as u64)?;
    Ok(m)
}

pub fn load_entity_graph(dir: &Path, fingerprint: Option<&str>) -> Result<EntityGraph> {
    let m = checked_manifest(dir, ArtifactKind::EntityGraph, fingerprint)?;
    let (path, bytes) = read_data(dir, &m)?;
    decode_entity_graph(&bytes, &path)
}

// Context tables.

pub fn encode_context(c: &ContextTable) -> Vec<u8> {
    let mut e = Encoder::new(CONTEXT_MAGIC, FORMAT_VERSION);
    e.len(c.num_labels);
    e.u32s(&c.count);
    e.f64s(&c.ppu);
    e.f64s(&c.fpu);
    e.buf
}

pub fn decode_context(bytes: &[u8], path: &Path) -> Result<ContextTable> {
    let mut d = Decoder::new(bytes, path, CONTEXT_MAGIC, FORMAT_VERSION)?;
    let num_labels = d.len(0)?;
    let count = d.u32s()?;
    let ppu = d.f64s()?;
    let fpu = d.f64s()?;
    if ppu.len() != count.len() || fpu.len() != count.len() || (num_labels > 0 && count.len() % num_labels != 0) {
        return Err(d.corrupt("table sizes disagree"));
    }
    d.finish()?;
    Ok(ContextTable {
        num_labels,
        count,
        ppu,
        fpu,
    })
}

pub fn save_context(dir: &Path, c: &ContextTable, fingerprint: &str) -> Result<ArtifactManifest> {
    let mut m = ArtifactManifest::new(ArtifactKind::ContextTable, fingerprint);
    write_data(dir, &mut m, &encode_context(c), c.count.len() as u64)?;
    Ok(m)
}

pub fn load_context(dir: &Path, fingerprint: Option<&str>) -> Result<ContextTable> {
    let m = checked_manifest(dir, ArtifactKind::ContextTable, fingerprint)?;
    let (path, bytes) = read_data(dir, &m)?;
    decode_context(&bytes, &path)
}

// Histograms.

pub fn encode_histogram(h: &Histogram) -> Vec<u8> {
    let mut e = Encoder::new(HISTOGRAM_MAGIC, FORMAT_VERSION);
    e.f64s(&h.points);
    e.len(h.rows.len());
    for (key, counts) in &h.rows {
        e.len(key.len());
        for &l in key {
            e.u16(l);
        }
        e.len(counts.len());
        for &c in counts {
            e.u64(c);
        }
    }
    e.buf
}

pub fn decode_histogram(bytes: &[u8], path: &Path) -> Result<Histogram> {
    let mut d = Decoder::new(bytes, path, HISTOGRAM_MAGIC, FORMAT_VERSION)?;
    let points = d.f64s()?;
    let n = d.len(16)?;
    let mut rows = std::collections::BTreeMap::new();
    for _ in 0..n {
        let k = d.len(2)?;
        let key = (0..k).map(|_| d.u16()).collect::<Result<Vec<_>>>()?;
        let c = d.len(8)?;
        if c != points.len() {
            return Err(d.corrupt("row length differs from point count"));
        }
        let counts = (0..c).map(|_| d.u64()).collect::<Result<Vec<_>>>()?;
        rows.insert(key, counts);
    }
    d.finish()?;
    Ok(Histogram { points, rows })
}

pub fn save_histogram(dir: &Path, h: &Histogram, fingerprint: &str) -> Result<ArtifactManifest> {
    let mut m = ArtifactManifest::new(ArtifactKind::Histogram, fingerprint);
    m.points = Some(h.points.clone());
    write_data(dir, &mut m, &encode_histogram(h), h.rows.len() as u64)?;
    Ok(m)
}

pub fn load_histogram(dir: &Path, fingerprint: Option<&str>) -> Result<Histogram> {
    let m = checked_manifest(dir, ArtifactKind::Histogram, fingerprint)?;
    let (path, bytes) = read_data(dir, &m)?;
    let h = decode_histogram(&bytes, &path)?;
    if m.points.as_ref() != Some(&h.points) {
        return Err(Error::corrupt(&path, "histogram points differ from the manifest"));
    }
    Ok(h)
}

// Path index.

fn index_manifest(idx: &PathIndex, fingerprint: &str) -> ArtifactManifest {
    let mut m = ArtifactManifest::new(ArtifactKind::PathIndex, fingerprint);
    let p = idx.params();
    m.max_len = Some(p.max_len);
    m.beta = Some(p.beta);
    m.gamma = Some(p.gamma);
    m.records = idx.record_count();
    m
}

fn finish_index_dir(dir: &Path, idx: &PathIndex, fingerprint: &str) -> Result<ArtifactManifest> {
    let mut m = index_manifest(idx, fingerprint);
    let (digest, bytes) = file_digest(&dir.join(&m.data_file))?;
    m.data_sha256 = digest;
    m.data_bytes = bytes;
    write_manifest(dir, &m)?;
    Ok(m)
}

pub fn save_path_index(dir: &Path, idx: &PathIndex, fingerprint: &str) -> Result<ArtifactManifest> {
    create_dir(dir)?;
    idx.write_segment(&dir.join(ArtifactKind::PathIndex.data_file()))?;
    finish_index_dir(dir, idx, fingerprint)
}

/// Builds the index directly into `dir`, streaming records to disk.
pub fn build_path_index_into(
    dir: &Path,
    g: &EntityGraph,
    opts: &BuildOptions,
    fingerprint: &str,
) -> Result<PathIndex> {
    create_dir(dir)?;
    let idx = build_path_index_to_file(g, opts, &dir.join(ArtifactKind::PathIndex.data_file()))?;
    finish_index_dir(dir, &idx, fingerprint)?;
    Ok(idx)
}

/// Opens an index directory. The data file is checked against the manifest
/// digest before use.
pub fn load_path_index(dir: &Path, fingerprint: Option<&str>) -> Result<PathIndex> {
    let m = checked_manifest(dir, ArtifactKind::PathIndex, fingerprint)?;
    let path = dir.join(&m.data_file);
    let (digest, bytes) = file_digest(&path)?;
    if bytes != m.data_bytes || digest != m.data_sha256 {
        return Err(Error::corrupt(&path, "content digest does not match the manifest"));
    }
    let idx = PathIndex::open(&path)?;
    if Some(idx.params()) != m.index_params() || idx.record_count() != m.records {
        return Err(Error::corrupt(&path, "segment header disagrees with the manifest"));
    }
    Ok(idx)
}

/// All records of an index in storage order, for comparisons.
pub fn index_records(idx: &PathIndex) -> Result<Vec<(Vec<u16>, PathRecord)>> {
    let seqs: Vec<Vec<u16>> = idx.sequences().map(<[u16]>::to_vec).collect();
    let mut out = Vec::new();
    for s in seqs {
        for r in idx.stored_records(&s, 0.0)? {
            out.push((s.clone(), r));
        }
    }
    Ok(out)
}

// Artifact sets.

#[derive(Debug, Clone, PartialEq)]
pub struct BuildConfig {
    pub params: IndexParams,
    pub threads: usize,
    /// Histogram points; defaults derived from `beta` when `None`.
    pub points: Option<Vec<f64>>,
}

impl BuildConfig {
    pub fn new(params: IndexParams) -> Self {
        BuildConfig {
            params,
            threads: 0,
            points: None,
        }
    }
}

/// Everything the online phase needs, loaded or freshly built.
#[derive(Debug)]
pub struct ArtifactSet {
    pub fingerprint: String,
    pub graph: EntityGraph,
    pub context: ContextTable,
    pub index: PathIndex,
    pub histogram: Histogram,
}

impl ArtifactSet {
    pub fn engine(&self) -> Engine<'_> {
        Engine::new(&self.graph, &self.index, &self.context, &self.histogram)
    }
}

/// Runs the offline phase for `pgd` and writes every artifact under `dir`.
pub fn build_artifacts(pgd: &Pgd, config: &BuildConfig, dir: &Path) -> Result<ArtifactSet> {
    config.params.validate()?;
    let fingerprint = pgd_fingerprint(pgd)?;
    let graph = build_entity_graph(pgd)?;
    create_dir(dir)?;
    save_entity_graph(&dir.join(ArtifactKind::EntityGraph.dir_name()), &graph, &fingerprint)?;
    let context = compute_context(&graph);
    save_context(&dir.join(ArtifactKind::ContextTable.dir_name()), &context, &fingerprint)?;
    let mut opts = BuildOptions::new(config.params);
    opts.threads = config.threads;
    let index = build_path_index_into(
        &dir.join(ArtifactKind::PathIndex.dir_name()),
        &graph,
        &opts,
        &fingerprint,
    )?;
    let points = config
        .points
        .clone()
        .unwrap_or_else(|| default_points(config.params.beta));
    let histogram = build_histograms(&index, &points)?;
    save_histogram(&dir.join(ArtifactKind::Histogram.dir_name()), &histogram, &fingerprint)?;
    Ok(ArtifactSet {
        fingerprint,
        graph,
        context,
        index,
        histogram,
    })
}

/// Loads an artifact set, refusing members built from different PGDs.
pub fn open_artifacts(dir: &Path) -> Result<ArtifactSet> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let graph_dir = dir.join(ArtifactKind::EntityGraph.dir_name());
    let fingerprint = read_manifest(&graph_dir)?.source_fingerprint;
    let fp = Some(fingerprint.as_str());
    let graph = load_entity_graph(&graph_dir, fp)?;
    let context = load_context(&dir.join(ArtifactKind::ContextTable.dir_name()), fp)?;
    let index = load_path_index(&dir.join(ArtifactKind::PathIndex.dir_name()), fp)?;
    let histogram = load_histogram(&dir.join(ArtifactKind::Histogram.dir_name()), fp)?;
    if context.num_nodes() != graph.num_nodes() || context.num_labels != graph.num_labels() {
        return Err(Error::Incompatible("context tables do not fit the entity graph".into()));
    }
    if index.num_labels() != graph.num_labels() {
        return Err(Error::Incompatible("path index does not fit the entity graph".into()));
    }
    Ok(ArtifactSet {
        fingerprint,
        graph,
        context,
        index,
        histogram,
    })
}

/// Manifests of every member of an artifact set.
pub fn artifact_manifests(dir: &Path) -> Result<Vec<ArtifactManifest>> {
    [
        ArtifactKind::EntityGraph,
        ArtifactKind::ContextTable,
        ArtifactKind::PathIndex,
        ArtifactKind::Histogram,
    ]
    .into_iter()
    .map(|k| read_manifest(&dir.join(k.dir_name())))
    .collect()
}
