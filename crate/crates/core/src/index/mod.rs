//! Offline structures: context tables, the two-level path index and
//! cardinality histograms.

mod build;
pub mod context;
pub mod histogram;
mod ondemand;
pub mod path;
pub(crate) mod segment;

use std::fs::File;
use std::path::Path;

pub use build::{
    build_path_index, build_path_index_to_file, build_path_index_with, BuildOptions,
    DEFAULT_BUFFER_BYTES,
};
pub use context::{compute_context, ContextTable};
pub use histogram::{build_histograms, default_points, estimate_count, Histogram};
pub use ondemand::on_demand_paths;
pub use path::{canonical, is_palindrome, IndexParams, PathRecord};
pub use segment::BucketRange;

use crate::error::{Error, Result};
use crate::model::{EntityGraph, LabelId};
use segment::{decode_entries, read_segment_info, Directory, Segment};

/// Path records keyed by canonical label sequence and probability bucket.
pub struct PathIndex {
    params: IndexParams,
    num_labels: usize,
    segment: Segment,
    directory: Directory,
    records: u64,
}

impl std::fmt::Debug for PathIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PathIndex")
            .field("params", &self.params)
            .field("sequences", &self.directory.len())
            .field("records", &self.records)
            .finish()
    }
}

impl PathIndex {
    pub fn params(&self) -> IndexParams {
        self.params
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn record_count(&self) -> u64 {
        self.records
    }

    /// Canonical label sequences that hold at least one record.
    pub fn sequences(&self) -> impl Iterator<Item = &[LabelId]> {
        self.directory.keys().map(Vec::as_slice)
    }

    pub fn bucket_ranges(&self, canonical_seq: &[LabelId]) -> &[BucketRange] {
        self.directory
            .get(canonical_seq)
            .map_or(&[], Vec::as_slice)
    }

    /// Opens a segment file written by [`build_path_index_to_file`] or
    /// [`PathIndex::write_segment`].
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let segment = Segment::File {
            file,
            path: path.to_path_buf(),
            len,
        };
        Self::from_segment(segment)
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        Self::from_segment(Segment::Memory(bytes))
    }

    fn from_segment(segment: Segment) -> Result<Self> {
        let info = read_segment_info(&segment)?;
        info.params.validate().map_err(|e| Error::corrupt(segment.path(), e.to_string()))?;
        Ok(PathIndex {
            params: info.params,
            num_labels: info.num_labels,
            segment,
            directory: info.directory,
            records: info.records,
        })
    }

    /// Raw segment bytes.
    pub fn segment_bytes(&self) -> Result<Vec<u8>> {
        Ok(self.segment.read(0, self.segment.len())?.into_owned())
    }

    /// Writes the segment to `path`, streaming if it is file-backed.
    pub fn write_segment(&self, path: &Path) -> Result<()> {
        match &self.segment {
            Segment::Memory(b) => std::fs::write(path, b).map_err(|e| Error::io(path, e)),
            Segment::File { path: src, .. } => {
                if src != path {
                    std::fs::copy(src, path).map_err(|e| Error::io(path, e))?;
                }
                Ok(())
            }
        }
    }

    /// Stored records of a canonical sequence with probability at least
    /// `alpha`, in stored orientation.
    pub fn stored_records(&self, canonical_seq: &[LabelId], alpha: f64) -> Result<Vec<PathRecord>> {
        let mut out = Vec::new();
        let Some(ranges) = self.directory.get(canonical_seq) else {
            return Ok(out);
        };
        let first = self.params.bucket_of(alpha.max(self.params.beta));
        let path = self.segment.path();
        for r in ranges.iter().filter(|r| r.bucket >= first) {
            let bytes = self.segment.read(r.offset, r.bytes)?;
            decode_entries(&bytes, &path, |rec| {
                if rec.probability() >= alpha {
                    out.push(rec);
                }
            })?;
        }
        Ok(out)
    }

    /// All paths labeled `seq` (in that orientation) with probability at
    /// least `alpha`.
    pub fn lookup(&self, seq: &[LabelId], alpha: f64) -> Result<Vec<PathRecord>> {
        if seq.is_empty() {
            return Ok(Vec::new());
        }
        if seq.len() - 1 > self.params.max_len {
            return Err(Error::PathTooLong {
                needed: seq.len() - 1,
                max: self.params.max_len,
            });
        }
        if alpha < self.params.beta {
            return Err(Error::BelowBuildThreshold {
                alpha,
                beta: self.params.beta,
            });
        }
        let canon = canonical(seq);
        let stored = self.stored_records(&canon, alpha)?;
        if canon.as_slice() != seq {
            return Ok(stored.into_iter().map(|r| r.reversed()).collect());
        }
        if seq.len() > 1 && is_palindrome(seq) {
            let mut out = Vec::with_capacity(stored.len() * 2);
            for r in stored {
                let rev = r.reversed();
                out.push(r);
                out.push(rev);
            }
            return Ok(out);
        }
        Ok(stored)
    }
}

/// Index lookup that switches to graph traversal when `alpha` is below the
/// build threshold.
pub fn index_lookup(
    idx: &PathIndex,
    g: &EntityGraph,
    seq: &[LabelId],
    alpha: f64,
) -> Result<Vec<PathRecord>> {
    match idx.lookup(seq, alpha) {
        Err(Error::BelowBuildThreshold { .. }) => Ok(on_demand_paths(g, seq, alpha)),
        other => other,
    }
}
