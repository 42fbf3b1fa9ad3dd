//! Persistence of PGD documents, offline artifacts and match results.
//!
//! Binary artifacts use little-endian IEEE-754 doubles so probabilities
//! round-trip bit for bit. Every artifact directory carries a manifest with
//! the source PGD fingerprint, build parameters and a digest of its data
//! file; loads refuse mismatches.

pub mod artifacts;
pub(crate) mod codec;
pub mod results;

pub use artifacts::{
    artifact_manifests, build_artifacts, build_path_index_into, index_records, load_context,
    load_entity_graph, load_histogram, load_path_index, open_artifacts, pgd_fingerprint,
    read_manifest, save_context, save_entity_graph, save_histogram, save_path_index,
    ArtifactKind, ArtifactManifest, ArtifactSet, BuildConfig, FORMAT_VERSION,
};
pub use results::{read_results_json, results_csv, results_json, write_results, ResultFormat, ResultRecord};

use std::path::Path;

use crate::error::Result;
use crate::model::Pgd;

pub fn save_pgd(path: &Path, pgd: &Pgd) -> Result<()> {
    pgd.save(path)
}

pub fn load_pgd(path: &Path) -> Result<Pgd> {
    Pgd::load(path)
}
