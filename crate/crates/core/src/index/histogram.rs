//! Per-label-sequence record counts at fixed probability points, with an
//! exponential fit between points.

use std::collections::BTreeMap;

use super::path::{canonical, is_palindrome};
use super::PathIndex;
use crate::error::{Error, Result};
use crate::model::LabelId;

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub points: Vec<f64>,
    /// Canonical sequence to lookup sizes at each point.
    pub rows: BTreeMap<Vec<LabelId>, Vec<u64>>,
}

/// `beta` followed by the multiples of 0.1 above it, ending at 1.
pub fn default_points(beta: f64) -> Vec<f64> {
    let mut points = vec![beta];
    for i in 1..=10 {
        let p = i as f64 / 10.0;
        if p > beta + 1e-12 {
            points.push(p);
        }
    }
    if *points.last().expect("non-empty") < 1.0 {
        points.push(1.0);
    }
    points
}

pub fn build_histograms(idx: &PathIndex, points: &[f64]) -> Result<Histogram> {
    if points.is_empty() || points.windows(2).any(|w| w[0] >= w[1]) || *points.last().unwrap() != 1.0 {
        return Err(Error::InvalidParameter(
            "histogram points must be strictly increasing and end at 1".into(),
        ));
    }
    if points[0] < idx.params().beta {
        return Err(Error::InvalidParameter(format!(
            "histogram point {} is below the build threshold {}",
            points[0],
            idx.params().beta
        )));
    }
    let mut rows = BTreeMap::new();
    let seqs: Vec<Vec<LabelId>> = idx.sequences().map(<[LabelId]>::to_vec).collect();
    for seq in seqs {
        let weight = if seq.len() > 1 && is_palindrome(&seq) { 2 } else { 1 };
        let mut counts = vec![0u64; points.len()];
        for rec in idx.stored_records(&seq, points[0])? {
            let p = rec.probability();
            for (c, &pt) in counts.iter_mut().zip(points) {
                if p >= pt {
                    *c += weight;
                }
            }
        }
        rows.insert(seq, counts);
    }
    Ok(Histogram {
        points: points.to_vec(),
        rows,
    })
}

/// Estimated lookup size for `seq` at threshold `alpha`.
pub fn estimate_count(h: &Histogram, seq: &[LabelId], alpha: f64) -> f64 {
    let Some(row) = h.rows.get(&canonical(seq)) else {
        return 0.0;
    };
    let pts = &h.points;
    let alpha = alpha.clamp(pts[0], 1.0);
    let i = match pts.iter().position(|&p| p >= alpha) {
        Some(i) if pts[i] == alpha => return row[i] as f64,
        Some(i) => i - 1,
        None => return row[pts.len() - 1] as f64,
    };
    let (c0, c1) = (row[i] as f64, row[i + 1] as f64);
    let t = (alpha - pts[i]) / (pts[i + 1] - pts[i]);
    if c0 == 0.0 || c1 == 0.0 {
        c0 + (c1 - c0) * t
    } else {
        c0 * (c1 / c0).powf(t)
    }
}
