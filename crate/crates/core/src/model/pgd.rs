//! Reference-level input: the probabilistic graph description (PGD).
//!
//! The PGD is kept close to its JSON document form. Validation never aborts;
//! it collects every violation so callers can report them all at once.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{is_probability, SUM_TOLERANCE};

/// Merge function selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MergeFn {
    /// Arithmetic mean of the input distributions.
    #[default]
    Average,
    /// Noisy-or over {T, F}: `1 - Π (1 - p_i)`. Only defined for edges.
    Disjunct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct MergeSpec {
    #[serde(default)]
    pub labels: MergeFn,
    #[serde(default)]
    pub edges: MergeFn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDoc {
    pub id: String,
    pub dist: BTreeMap<String, f64>,
}

/// An undirected reference edge. Exactly one of `p` and `cpt` is set.
///
/// CPT keys are `"<label of u>,<label of v>"`. Missing CPT entries are 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub u: String,
    pub v: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpt: Option<BTreeMap<String, f64>>,
}

/// A candidate entity. `p` may be omitted for singleton sets only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetDoc {
    pub id: String,
    pub refs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Pgd {
    pub labels: Vec<String>,
    #[serde(default)]
    pub references: Vec<ReferenceDoc>,
    #[serde(default)]
    pub edges: Vec<EdgeDoc>,
    #[serde(default)]
    pub sets: Vec<SetDoc>,
    #[serde(default)]
    pub merge: MergeSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    EmptyAlphabet,
    DuplicateLabel,
    DuplicateId,
    UnknownLabel,
    DistributionSum,
    ProbabilityRange,
    DanglingReference,
    SelfLoop,
    EdgeProbabilityShape,
    EmptySet,
    MissingSetProbability,
    UnsupportedMerge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, message: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            message: message.into(),
        });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            return Ok(());
        }
        let joined = self
            .violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::InvalidPgd(joined))
    }
}

impl Pgd {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut pgd: Pgd = serde_json::from_str(text)?;
        pgd.dedup_edges();
        Ok(pgd)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    /// Drops repeated unordered pairs, keeping the first occurrence.
    pub fn dedup_edges(&mut self) {
        let mut seen = HashSet::new();
        self.edges.retain(|e| {
            let key = if e.u <= e.v {
                (e.u.clone(), e.v.clone())
            } else {
                (e.v.clone(), e.u.clone())
            };
            seen.insert(key)
        });
    }

    /// True when any edge carries a label-conditioned CPT.
    pub fn is_correlated(&self) -> bool {
        self.edges.iter().any(|e| e.cpt.is_some())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.labels.is_empty() {
            report.push(ViolationKind::EmptyAlphabet, "label alphabet is empty");
        }
        let mut labels = HashSet::new();
        for l in &self.labels {
            if !labels.insert(l.as_str()) {
                report.push(ViolationKind::DuplicateLabel, format!("label `{l}` declared twice"));
            }
        }

        let mut ref_ids = HashSet::new();
        for r in &self.references {
            if !ref_ids.insert(r.id.as_str()) {
                report.push(ViolationKind::DuplicateId, format!("reference `{}` declared twice", r.id));
            }
            let mut sum = 0.0;
            for (label, &p) in &r.dist {
                if !labels.contains(label.as_str()) {
                    report.push(
                        ViolationKind::UnknownLabel,
                        format!("reference `{}` uses undeclared label `{label}`", r.id),
                    );
                }
                if !is_probability(p) {
                    report.push(
                        ViolationKind::ProbabilityRange,
                        format!("reference `{}` label `{label}` has probability {p}", r.id),
                    );
                }
                sum += p;
            }
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                report.push(
                    ViolationKind::DistributionSum,
                    format!("reference `{}` distribution sums to {sum}", r.id),
                );
            }
        }

        let mut pairs = HashSet::new();
        for e in &self.edges {
            for end in [&e.u, &e.v] {
                if !ref_ids.contains(end.as_str()) {
                    report.push(
                        ViolationKind::DanglingReference,
                        format!("edge {}-{} references undeclared `{end}`", e.u, e.v),
                    );
                }
            }
            if e.u == e.v {
                report.push(ViolationKind::SelfLoop, format!("edge {}-{} is a self loop", e.u, e.v));
            }
            let key = if e.u <= e.v { (&e.u, &e.v) } else { (&e.v, &e.u) };
            if !pairs.insert(key) {
                report.push(
                    ViolationKind::DuplicateId,
                    format!("edge {}-{} declared twice", e.u, e.v),
                );
            }
            match (&e.p, &e.cpt) {
                (Some(p), None) => {
                    if !is_probability(*p) {
                        report.push(
                            ViolationKind::ProbabilityRange,
                            format!("edge {}-{} has probability {p}", e.u, e.v),
                        );
                    }
                }
                (None, Some(cpt)) => {
                    for (key, &p) in cpt {
                        let parsed = parse_cpt_key(key);
                        match parsed {
                            Some((a, b)) if labels.contains(a) && labels.contains(b) => {}
                            _ => report.push(
                                ViolationKind::UnknownLabel,
                                format!("edge {}-{} has malformed CPT key `{key}`", e.u, e.v),
                            ),
                        }
                        if !is_probability(p) {
                            report.push(
                                ViolationKind::ProbabilityRange,
                                format!("edge {}-{} CPT entry `{key}` is {p}", e.u, e.v),
                            );
                        }
                    }
                }
                _ => report.push(
                    ViolationKind::EdgeProbabilityShape,
                    format!("edge {}-{} must carry exactly one of `p` and `cpt`", e.u, e.v),
                ),
            }
        }

        let mut set_ids = HashSet::new();
        for s in &self.sets {
            if !set_ids.insert(s.id.as_str()) {
                report.push(ViolationKind::DuplicateId, format!("set `{}` declared twice", s.id));
            }
            if s.refs.is_empty() {
                report.push(ViolationKind::EmptySet, format!("set `{}` is empty", s.id));
            }
            let mut members = HashSet::new();
            for r in &s.refs {
                if !ref_ids.contains(r.as_str()) {
                    report.push(
                        ViolationKind::DanglingReference,
                        format!("set `{}` references undeclared `{r}`", s.id),
                    );
                }
                if !members.insert(r.as_str()) {
                    report.push(
                        ViolationKind::DuplicateId,
                        format!("set `{}` lists `{r}` twice", s.id),
                    );
                }
            }
            match s.p {
                Some(p) if !is_probability(p) => report.push(
                    ViolationKind::ProbabilityRange,
                    format!("set `{}` has probability {p}", s.id),
                ),
                None if s.refs.len() > 1 => report.push(
                    ViolationKind::MissingSetProbability,
                    format!("set `{}` has several references but no probability", s.id),
                ),
                _ => {}
            }
        }

        // Implicit singletons take the reference id; it must not clash with a
        // declared set unless that set is the singleton itself.
        let declared_singletons: HashSet<&str> = self
            .sets
            .iter()
            .filter(|s| s.refs.len() == 1)
            .map(|s| s.refs[0].as_str())
            .collect();
        let set_by_id: HashMap<&str, &SetDoc> =
            self.sets.iter().map(|s| (s.id.as_str(), s)).collect();
        for r in &self.references {
            if declared_singletons.contains(r.id.as_str()) {
                continue;
            }
            if let Some(s) = set_by_id.get(r.id.as_str()) {
                report.push(
                    ViolationKind::DuplicateId,
                    format!(
                        "set `{}` shares its id with reference `{}` whose implicit singleton needs it",
                        s.id, r.id
                    ),
                );
            }
        }

        if self.merge.labels == MergeFn::Disjunct {
            report.push(
                ViolationKind::UnsupportedMerge,
                "`disjunct` is only defined for edge existence",
            );
        }
        report
    }
}

pub(crate) fn parse_cpt_key(key: &str) -> Option<(&str, &str)> {
    let (a, b) = key.split_once(',')?;
    Some((a.trim(), b.trim()))
}
