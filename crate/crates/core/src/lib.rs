//! Clustered saliency prediction.
//!
//! Subjects of an eye-tracking study are grouped by how similarly they look
//! at images (per-image K-Means co-occurrence) and by their survey features,
//! using Louvain community detection on the resulting similarity network.
//! Each cluster then gets a translator that maps a universal saliency map to
//! the cluster's average map, and predictions are scored with AUC-Judd, NSS,
//! CC and SIM. New subjects are placed into the closest existing cluster.
//!
//! Module map:
//!
//! - [`map`]: saliency and fixation maps plus map arithmetic.
//! - [`metrics`]: the four evaluation metrics and per-cluster aggregation.
//! - [`clustering`]: features, K-Means, the subject network, Louvain.
//! - [`translation`]: per-cluster translators and train/test splitting.
//! - [`assignment`]: closeness-based assignment of new subjects.
//! - [`pipeline`]: dataset ingestion, end-to-end runs and reports.
//! - [`synthetic`]: planted-group dataset generator used by tests and demos.

pub mod assignment;
pub mod clustering;
mod error;
pub mod map;
pub mod metrics;
pub mod pipeline;
pub mod seed;
pub mod synthetic;
pub mod translation;

pub use error::{Error, Result};
pub use map::{FixationMap, ImageId, SaliencyMap, SubjectId};

/// Order-preserving map over a slice; parallel when the `parallel` feature
/// is enabled. Output order never depends on scheduling.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}
