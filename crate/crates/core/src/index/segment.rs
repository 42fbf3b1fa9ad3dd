//! Sorted key-value segment holding path records.
//!
//! Layout:
//!
//! ```text
//! header    magic "UGPIDX01" | version u32 | labels u16 | max_len u8 | beta f64 | gamma f64
//! entries   key_len u16 | key | val_len u16 | val        (sorted by key)
//! directory key count u32, then per label sequence:
//!           seq_len u8 | labels u16.. | ranges u16 | (bucket u16 | offset u64 | bytes u64 | count u32)..
//! footer    directory offset u64 | directory bytes u64 | records u64 | magic "UGPIDXFT"
//! ```
//!
//! Keys are `seq_len u8 | labels u16 BE.. | bucket u16 BE | ordinal u32 BE` so
//! byte order equals (length, labels, bucket, ordinal) order. Values are
//! `n u8 | nodes u32 LE.. | pr_le f64 LE | pr_n f64 LE`. Directory and header
//! integers are little-endian.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::path::{IndexParams, PathRecord};
use crate::error::{Error, Result};
use crate::model::LabelId;

pub const SEGMENT_MAGIC: &[u8; 8] = b"UGPIDX01";
pub const FOOTER_MAGIC: &[u8; 8] = b"UGPIDXFT";
pub const SEGMENT_VERSION: u32 = 1;
const HEADER_LEN: u64 = 8 + 4 + 2 + 1 + 8 + 8;
const FOOTER_LEN: u64 = 8 + 8 + 8 + 8;

/// Location of one bucket's entries for one label sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketRange {
    pub bucket: u16,
    pub offset: u64,
    pub bytes: u64,
    pub count: u32,
}

pub type Directory = BTreeMap<Vec<LabelId>, Vec<BucketRange>>;

pub(crate) enum Segment {
    Memory(Vec<u8>),
    File { file: File, path: PathBuf, len: u64 },
}

impl Segment {
    pub(crate) fn len(&self) -> u64 {
        match self {
            Segment::Memory(b) => b.len() as u64,
            Segment::File { len, .. } => *len,
        }
    }

    pub(crate) fn path(&self) -> PathBuf {
        match self {
            Segment::Memory(_) => PathBuf::from("<memory>"),
            Segment::File { path, .. } => path.clone(),
        }
    }

    pub(crate) fn read(&self, offset: u64, len: u64) -> Result<Cow<'_, [u8]>> {
        if offset.checked_add(len).map_or(true, |end| end > self.len()) {
            return Err(Error::corrupt(self.path(), "read past end of segment"));
        }
        match self {
            Segment::Memory(b) => Ok(Cow::Borrowed(&b[offset as usize..(offset + len) as usize])),
            Segment::File { file, path, .. } => {
                use std::os::unix::fs::FileExt;
                let mut buf = vec![0u8; len as usize];
                file.read_exact_at(&mut buf, offset)
                    .map_err(|e| Error::io(path.clone(), e))?;
                Ok(Cow::Owned(buf))
            }
        }
    }
}

pub(crate) fn encode_header(params: &IndexParams, num_labels: usize) -> Vec<u8> {
    let mut h = Vec::with_capacity(HEADER_LEN as usize);
    h.extend_from_slice(SEGMENT_MAGIC);
    h.extend_from_slice(&SEGMENT_VERSION.to_le_bytes());
    h.extend_from_slice(&(num_labels as u16).to_le_bytes());
    h.push(params.max_len as u8);
    h.extend_from_slice(&params.beta.to_le_bytes());
    h.extend_from_slice(&params.gamma.to_le_bytes());
    h
}

/// Streams sorted entries to `W` and collects the directory.
pub(crate) struct SegmentWriter<W: Write> {
    out: W,
    offset: u64,
    params: IndexParams,
    directory: Directory,
    records: u64,
    scratch: Vec<u8>,
}

impl<W: Write> SegmentWriter<W> {
    pub(crate) fn new(mut out: W, params: IndexParams, num_labels: usize) -> std::io::Result<Self> {
        let header = encode_header(&params, num_labels);
        out.write_all(&header)?;
        Ok(SegmentWriter {
            out,
            offset: header.len() as u64,
            params,
            directory: Directory::new(),
            records: 0,
            scratch: Vec::with_capacity(64),
        })
    }

    /// Writes all records of one canonical label sequence. Records must be
    /// sorted by bucket and sequences must arrive in key order.
    pub(crate) fn write_sequence(
        &mut self,
        seq: &[LabelId],
        records: &[(u16, PathRecord)],
    ) -> std::io::Result<()> {
        if records.is_empty() {
            return Ok(());
        }
        let mut ranges: Vec<BucketRange> = Vec::new();
        let mut ordinal = 0u32;
        for (bucket, rec) in records {
            match ranges.last_mut() {
                Some(r) if r.bucket == *bucket => {}
                _ => {
                    ordinal = 0;
                    ranges.push(BucketRange {
                        bucket: *bucket,
                        offset: self.offset,
                        bytes: 0,
                        count: 0,
                    });
                }
            }
            self.scratch.clear();
            encode_entry(&mut self.scratch, &self.params, seq, *bucket, ordinal, rec);
            self.out.write_all(&self.scratch)?;
            let range = ranges.last_mut().expect("range pushed above");
            range.bytes += self.scratch.len() as u64;
            range.count += 1;
            self.offset += self.scratch.len() as u64;
            ordinal += 1;
        }
        self.records += records.len() as u64;
        self.directory.insert(seq.to_vec(), ranges);
        Ok(())
    }

    pub(crate) fn finish(mut self) -> std::io::Result<(W, Directory, u64)> {
        let dir = encode_directory(&self.directory);
        self.out.write_all(&dir)?;
        self.out.write_all(&self.offset.to_le_bytes())?;
        self.out.write_all(&(dir.len() as u64).to_le_bytes())?;
        self.out.write_all(&self.records.to_le_bytes())?;
        self.out.write_all(FOOTER_MAGIC)?;
        self.out.flush()?;
        Ok((self.out, self.directory, self.records))
    }
}

fn encode_entry(
    buf: &mut Vec<u8>,
    params: &IndexParams,
    seq: &[LabelId],
    bucket: u16,
    ordinal: u32,
    rec: &PathRecord,
) {
    let key_len = 1 + 2 * seq.len() + 2 + 4;
    buf.extend_from_slice(&(key_len as u16).to_le_bytes());
    buf.push(seq.len() as u8);
    for l in seq {
        buf.extend_from_slice(&l.to_be_bytes());
    }
    buf.extend_from_slice(&params.bucket_fixed_point(bucket).to_be_bytes());
    buf.extend_from_slice(&ordinal.to_be_bytes());
    let val_len = 1 + 4 * rec.nodes.len() + 16;
    buf.extend_from_slice(&(val_len as u16).to_le_bytes());
    buf.push(rec.nodes.len() as u8);
    for v in &rec.nodes {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&rec.pr_le.to_le_bytes());
    buf.extend_from_slice(&rec.pr_n.to_le_bytes());
}

/// Decodes every entry in `bytes`, a run of whole entries.
pub(crate) fn decode_entries(
    bytes: &[u8],
    path: &Path,
    mut visit: impl FnMut(PathRecord),
) -> Result<()> {
    let mut cur = Cursor { bytes, pos: 0, path };
    while cur.pos < bytes.len() {
        let key_len = cur.u16()? as usize;
        cur.skip(key_len)?;
        let val_len = cur.u16()? as usize;
        let start = cur.pos;
        let n = cur.u8()? as usize;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            nodes.push(cur.u32()?);
        }
        let pr_le = cur.f64()?;
        let pr_n = cur.f64()?;
        if cur.pos - start != val_len {
            return Err(Error::corrupt(path, "value length mismatch"));
        }
        visit(PathRecord { nodes, pr_le, pr_n });
    }
    Ok(())
}

fn encode_directory(dir: &Directory) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(dir.len() as u32).to_le_bytes());
    for (seq, ranges) in dir {
        out.push(seq.len() as u8);
        for l in seq {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out.extend_from_slice(&(ranges.len() as u16).to_le_bytes());
        for r in ranges {
            out.extend_from_slice(&r.bucket.to_le_bytes());
            out.extend_from_slice(&r.offset.to_le_bytes());
            out.extend_from_slice(&r.bytes.to_le_bytes());
            out.extend_from_slice(&r.count.to_le_bytes());
        }
    }
    out
}

/// Header fields read back from a segment.
pub(crate) struct SegmentInfo {
    pub params: IndexParams,
    pub num_labels: usize,
    pub directory: Directory,
    pub records: u64,
}

pub(crate) fn read_segment_info(seg: &Segment) -> Result<SegmentInfo> {
    let path = seg.path();
    if seg.len() < HEADER_LEN + FOOTER_LEN {
        return Err(Error::corrupt(&path, "segment shorter than header and footer"));
    }
    let header = seg.read(0, HEADER_LEN)?;
    let mut cur = Cursor { bytes: &header, pos: 0, path: &path };
    if cur.take(8)? != SEGMENT_MAGIC {
        return Err(Error::corrupt(&path, "bad segment magic"));
    }
    let version = cur.u32()?;
    if version != SEGMENT_VERSION {
        return Err(Error::Incompatible(format!(
            "segment format version {version}, expected {SEGMENT_VERSION}"
        )));
    }
    let num_labels = cur.u16()? as usize;
    let max_len = cur.u8()? as usize;
    let beta = cur.f64()?;
    let gamma = cur.f64()?;
    let params = IndexParams { max_len, beta, gamma };

    let footer = seg.read(seg.len() - FOOTER_LEN, FOOTER_LEN)?;
    let mut cur = Cursor { bytes: &footer, pos: 0, path: &path };
    let dir_offset = cur.u64()?;
    let dir_len = cur.u64()?;
    let records = cur.u64()?;
    if cur.take(8)? != FOOTER_MAGIC {
        return Err(Error::corrupt(&path, "bad footer magic (truncated segment?)"));
    }
    if dir_offset < HEADER_LEN || dir_offset.checked_add(dir_len) != Some(seg.len() - FOOTER_LEN) {
        return Err(Error::corrupt(&path, "directory bounds do not match segment size"));
    }
    let dir_bytes = seg.read(dir_offset, dir_len)?;
    let mut cur = Cursor { bytes: &dir_bytes, pos: 0, path: &path };
    let mut directory = Directory::new();
    let keys = cur.u32()?;
    let mut counted = 0u64;
    for _ in 0..keys {
        let n = cur.u8()? as usize;
        let mut seq = Vec::with_capacity(n);
        for _ in 0..n {
            let l = cur.u16()?;
            if l as usize >= num_labels {
                return Err(Error::corrupt(&path, "label id out of range"));
            }
            seq.push(l);
        }
        let nr = cur.u16()? as usize;
        let mut ranges = Vec::with_capacity(nr);
        for _ in 0..nr {
            let r = BucketRange {
                bucket: cur.u16()?,
                offset: cur.u64()?,
                bytes: cur.u64()?,
                count: cur.u32()?,
            };
            if r.offset < HEADER_LEN || r.offset.checked_add(r.bytes).map_or(true, |e| e > dir_offset) {
                return Err(Error::corrupt(&path, "bucket range outside entry area"));
            }
            counted += r.count as u64;
            ranges.push(r);
        }
        directory.insert(seq, ranges);
    }
    if cur.pos != dir_bytes.len() || counted != records {
        return Err(Error::corrupt(&path, "directory does not match record count"));
    }
    Ok(SegmentInfo {
        params,
        num_labels,
        directory,
        records,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::corrupt(self.path, "unexpected end of data"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn skip(&mut self, n: usize) -> Result<()> {
        self.take(n).map(|_| ())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
