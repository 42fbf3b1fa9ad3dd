//! Path records, label-sequence orientation and probability buckets.

use crate::error::{Error, Result};
use crate::model::{LabelId, NodeId};

/// Smallest accepted bucket width; keeps fixed-point bucket keys distinct.
pub const MIN_GAMMA: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub nodes: Vec<NodeId>,
    pub pr_le: f64,
    pub pr_n: f64,
}

impl PathRecord {
    pub fn probability(&self) -> f64 {
        self.pr_le * self.pr_n
    }

    pub fn reversed(&self) -> PathRecord {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        PathRecord {
            nodes,
            pr_le: self.pr_le,
            pr_n: self.pr_n,
        }
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// The lexicographically smaller of `seq` and its reversal.
pub fn canonical(seq: &[LabelId]) -> Vec<LabelId> {
    let rev: Vec<LabelId> = seq.iter().rev().copied().collect();
    if rev.as_slice() < seq {
        rev
    } else {
        seq.to_vec()
    }
}

pub fn is_palindrome(seq: &[LabelId]) -> bool {
    seq.iter().eq(seq.iter().rev())
}

/// Index build parameters: maximum path length (edges), build threshold and
/// bucket resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexParams {
    pub max_len: usize,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for IndexParams {
    fn default() -> Self {
        IndexParams {
            max_len: 3,
            beta: 0.1,
            gamma: 0.1,
        }
    }
}

impl IndexParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_len < 1 || self.max_len > 8 {
            return Err(Error::InvalidParameter(format!(
                "max path length {} is outside 1..=8",
                self.max_len
            )));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("beta {} is outside (0, 1]", self.beta)));
        }
        if !(self.gamma >= MIN_GAMMA && self.gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma {} is outside [{MIN_GAMMA}, 1]",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Index of the highest bucket.
    pub fn top_bucket(&self) -> u16 {
        ((1.0 - self.beta) / self.gamma + 1e-9).floor() as u16
    }

    /// Lower bound of bucket `b`.
    pub fn bucket_floor(&self, b: u16) -> f64 {
        (self.beta + b as f64 * self.gamma).min(1.0)
    }

    /// Bucket holding probability `p`: `floor((p - beta) / gamma)`, clamped
    /// and corrected so that `bucket_floor(b) <= p < bucket_floor(b + 1)`,
    /// with 1 in the top bucket.
    pub fn bucket_of(&self, p: f64) -> u16 {
        let top = self.top_bucket();
        if p <= self.beta {
            return 0;
        }
        let mut b = ((p - self.beta) / self.gamma).floor().clamp(0.0, top as f64) as u16;
        while b > 0 && self.beta + b as f64 * self.gamma > p {
            b -= 1;
        }
        while b < top && self.beta + (b + 1) as f64 * self.gamma <= p {
            b += 1;
        }
        b
    }

    /// 16-bit fixed-point encoding of a bucket's lower bound.
    pub fn bucket_fixed_point(&self, b: u16) -> u16 {
        (self.bucket_floor(b) * 65535.0).round() as u16
    }
}
