//! Merge functions that turn several input distributions into one.

use super::pgd::MergeFn;

/// Merges label distributions (dense, one entry per label).
///
/// Only [`MergeFn::Average`] is defined for labels; validation rejects the
/// other selector before a graph is built.
pub fn merge_labels(dists: &[&[f64]]) -> Vec<f64> {
    average(dists)
}

/// Merges edge-existence tables elementwise. Each table holds `Pr(e = T)`
/// for one or more label conditions; scalars are one-entry tables.
pub fn merge_edges(f: MergeFn, tables: &[&[f64]]) -> Vec<f64> {
    match f {
        MergeFn::Average => average(tables),
        MergeFn::Disjunct => {
            let width = tables.first().map_or(0, |t| t.len());
            (0..width)
                .map(|i| 1.0 - tables.iter().map(|t| 1.0 - t[i]).product::<f64>())
                .collect()
        }
    }
}

fn average(rows: &[&[f64]]) -> Vec<f64> {
    let width = rows.first().map_or(0, |r| r.len());
    let n = rows.len() as f64;
    (0..width)
        .map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / n)
        .collect()
}
