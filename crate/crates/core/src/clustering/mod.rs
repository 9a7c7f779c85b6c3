//! Subject similarity clustering and the two baseline clusterings.

pub mod features;
pub mod graph;
pub mod kmeans;
pub mod louvain;
pub mod similarity;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, ImageId, Result, SaliencyMap, SubjectId};
pub use features::{Category, FeatureSchema, FeatureVector};
pub use graph::{build_network, modularity, Network, SubjectGraph};
pub use kmeans::kmeans;
pub use louvain::louvain;
pub use similarity::{feature_similarity_report, FeatureSimilarityReport};

/// Feature weights of the named clustering settings `Setting0..Setting6`.
pub const PRESET_FEATURE_WEIGHTS: [f64; 7] = [0.0, 0.1, 0.5, 1.0, 4.0, 20.0, 100.0];
pub const DEFAULT_K: usize = 6;
pub const DEFAULT_SAMPLE_SIZE: usize = 100;
pub const DEFAULT_MAP_RESOLUTION: (usize, usize) = (64, 64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringConfig {
    /// K-Means cluster count, used for both the per-image and the feature step.
    pub k: usize,
    /// Weight added for pairs co-clustered by their personal features.
    pub feature_weight: f64,
    /// Number of images sampled for network construction.
    pub sample_size: usize,
    pub feature_categories: Vec<Category>,
    pub seed: u64,
    /// Maps are resampled to this size before per-image K-Means.
    pub map_resolution: (usize, usize),
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            feature_weight: 0.0,
            sample_size: DEFAULT_SAMPLE_SIZE,
            feature_categories: Category::ALL.to_vec(),
            seed: 0,
            map_resolution: DEFAULT_MAP_RESOLUTION,
        }
    }
}

impl ClusteringConfig {
    /// `Setting0` .. `Setting6`: K = 6, all features, preset W.
    pub fn preset(index: usize, seed: u64) -> Result<Self> {
        let w = PRESET_FEATURE_WEIGHTS
            .get(index)
            .ok_or_else(|| Error::Config(format!("no preset Setting{index}")))?;
        Ok(Self {
            feature_weight: *w,
            seed,
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !self.feature_weight.is_finite() || self.feature_weight < 0.0 {
            return Err(Error::Config(format!(
                "feature weight must be finite and non-negative, got {}",
                self.feature_weight
            )));
        }
        if self.sample_size == 0 {
            return Err(Error::Config("sample size must be at least 1".into()));
        }
        if self.map_resolution.0 == 0 || self.map_resolution.1 == 0 {
            return Err(Error::Config("map resolution must be non-zero".into()));
        }
        Ok(())
    }
}

/// A partition of subjects into clusters `0..n`, every index in use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    try_from = "BTreeMap<SubjectId, usize>",
    into = "BTreeMap<SubjectId, usize>"
)]
pub struct Clustering {
    assignment: BTreeMap<SubjectId, usize>,
    n: usize,
}

impl TryFrom<BTreeMap<SubjectId, usize>> for Clustering {
    type Error = Error;

    fn try_from(assignment: BTreeMap<SubjectId, usize>) -> Result<Self> {
        Clustering::new(assignment)
    }
}

impl From<Clustering> for BTreeMap<SubjectId, usize> {
    fn from(c: Clustering) -> Self {
        c.assignment
    }
}

impl Clustering {
    pub fn new(assignment: BTreeMap<SubjectId, usize>) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::InvalidClustering("no subjects".into()));
        }
        let n = assignment.values().max().map_or(0, |m| m + 1);
        let mut used = vec![false; n];
        for &c in assignment.values() {
            used[c] = true;
        }
        if let Some(c) = used.iter().position(|u| !u) {
            return Err(Error::InvalidClustering(format!(
                "cluster {c} has no members"
            )));
        }
        Ok(Self { assignment, n })
    }

    /// Builds a clustering from arbitrary labels, renumbering clusters by
    /// their smallest member id.
    pub fn from_labels(subjects: &[SubjectId], labels: &[usize]) -> Result<Self> {
        if subjects.len() != labels.len() {
            return Err(Error::InvalidClustering(format!(
                "{} subjects but {} labels",
                subjects.len(),
                labels.len()
            )));
        }
        let mut pairs: Vec<(&SubjectId, usize)> =
            subjects.iter().zip(labels.iter().copied()).collect();
        pairs.sort();
        let mut renumber = BTreeMap::new();
        let mut assignment = BTreeMap::new();
        for (s, l) in pairs {
            let next = renumber.len();
            let c = *renumber.entry(l).or_insert(next);
            if assignment.insert(s.clone(), c).is_some() {
                return Err(Error::InvalidClustering(format!(
                    "subject {s} listed twice"
                )));
            }
        }
        Self::new(assignment)
    }

    pub fn all_in_one(subjects: &[SubjectId]) -> Self {
        Self::from_labels(subjects, &vec![0; subjects.len()]).expect("non-empty subject list")
    }

    pub fn singletons(subjects: &[SubjectId]) -> Self {
        let labels: Vec<usize> = (0..subjects.len()).collect();
        Self::from_labels(subjects, &labels).expect("non-empty subject list")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn cluster_of(&self, s: &SubjectId) -> Option<usize> {
        self.assignment.get(s).copied()
    }

    /// Subjects in ascending order.
    pub fn subjects(&self) -> impl Iterator<Item = &SubjectId> {
        self.assignment.keys()
    }

    pub fn assignment(&self) -> &BTreeMap<SubjectId, usize> {
        &self.assignment
    }

    /// Members of cluster `c`, sorted.
    pub fn members(&self, c: usize) -> Vec<SubjectId> {
        self.assignment
            .iter()
            .filter(|(_, &k)| k == c)
            .map(|(s, _)| s.clone())
            .collect()
    }

    pub fn clusters(&self) -> Vec<Vec<SubjectId>> {
        let mut out = vec![Vec::new(); self.n];
        for (s, &c) in &self.assignment {
            out[c].push(s.clone());
        }
        out
    }
}

/// I.i.d. uniform assignment to `n` clusters; empty clusters are dropped.
pub fn random_clustering(subjects: &[SubjectId], n: usize, seed: u64) -> Result<Clustering> {
    if n == 0 {
        return Err(Error::Config("cluster count must be at least 1".into()));
    }
    let mut sorted = subjects.to_vec();
    sorted.sort();
    let mut rng = seed::rng_for(seed, "random-assign");
    let labels: Vec<usize> = sorted.iter().map(|_| rng.gen_range(0..n)).collect();
    Clustering::from_labels(&sorted, &labels)
}

pub fn all_in_one_clustering(subjects: &[SubjectId]) -> Clustering {
    Clustering::all_in_one(subjects)
}

/// Result of subject similarity clustering, with the intermediate network.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityClustering {
    pub clustering: Clustering,
    pub network: Network,
    /// `None` when the network carries no weight.
    pub modularity: Option<f64>,
}

/// Network construction followed by Louvain. A single subject forms one
/// cluster; a network without any edge weight yields singletons.
pub fn subject_similarity_clustering(
    psm: &BTreeMap<(SubjectId, ImageId), SaliencyMap>,
    features: &BTreeMap<SubjectId, FeatureVector>,
    subjects: &[SubjectId],
    images: &[ImageId],
    cfg: &ClusteringConfig,
) -> Result<SimilarityClustering> {
    let network = build_network(psm, features, subjects, images, cfg)?;
    let nodes = network.graph.nodes();
    let (clustering, q) = if nodes.len() == 1 {
        (Clustering::all_in_one(nodes), None)
    } else if network.graph.total_weight() <= 0.0 {
        (Clustering::singletons(nodes), None)
    } else {
        let c = louvain(&network.graph, cfg.seed)?;
        let q = modularity(&network.graph, &c)?;
        (c, Some(q))
    };
    Ok(SimilarityClustering {
        clustering,
        network,
        modularity: q,
    })
}
