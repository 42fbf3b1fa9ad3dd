//! Match result files: a JSON array of
//! `{"mapping": {query node: entity}, "pr_le", "pr_n", "probability"}` or a
//! CSV table with one column per query node.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NamedMatch;
use crate::query::QueryGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResultFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for ResultFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ResultFormat::Json),
            "csv" => Ok(ResultFormat::Csv),
            other => Err(Error::InvalidParameter(format!("unknown result format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub mapping: BTreeMap<String, String>,
    pub pr_le: f64,
    pub pr_n: f64,
    pub probability: f64,
}

pub fn to_records(q: &QueryGraph, matches: &[NamedMatch]) -> Vec<ResultRecord> {
    matches
        .iter()
        .map(|m| ResultRecord {
            mapping: q
                .nodes
                .iter()
                .zip(&m.mapping)
                .map(|(n, e)| (n.id.clone(), e.clone()))
                .collect(),
            pr_le: m.pr_le,
            pr_n: m.pr_n,
            probability: m.probability,
        })
        .collect()
}

/// Inverse of [`to_records`]; fails when a record misses a query node.
pub fn from_records(q: &QueryGraph, records: &[ResultRecord]) -> Result<Vec<NamedMatch>> {
    records
        .iter()
        .map(|r| {
            let mapping = q
                .nodes
                .iter()
                .map(|n| {
                    r.mapping.get(&n.id).cloned().ok_or_else(|| {
                        Error::InvalidQuery(format!("result lacks query node {:?}", n.id))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(NamedMatch {
                mapping,
                pr_le: r.pr_le,
                pr_n: r.pr_n,
                probability: r.probability,
            })
        })
        .collect()
}

pub fn results_json(q: &QueryGraph, matches: &[NamedMatch]) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_records(q, matches))?)
}

pub fn results_csv(q: &QueryGraph, matches: &[NamedMatch]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = q.nodes.iter().map(|n| n.id.clone()).collect();
    header.extend(["pr_le", "pr_n", "probability"].map(String::from));
    w.write_record(&header)?;
    for m in matches {
        let mut row = m.mapping.clone();
        row.extend([m.pr_le, m.pr_n, m.probability].map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of UTF-8 fields"))
}

pub fn write_results(path: &Path, q: &QueryGraph, matches: &[NamedMatch], format: ResultFormat) -> Result<()> {
    let text = match format {
        ResultFormat::Json => results_json(q, matches)?,
        ResultFormat::Csv => results_csv(q, matches)?,
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_results_json(path: &Path, q: &QueryGraph) -> Result<Vec<NamedMatch>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records: Vec<ResultRecord> =
        serde_json::from_str(&text).map_err(|e| Error::corrupt(path, e.to_string()))?;
    from_records(q, &records)
}
