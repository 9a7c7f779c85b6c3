//! The subject similarity network and its construction.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use super::kmeans::kmeans;
use super::{Clustering, ClusteringConfig};
use crate::map::resize_map;
use crate::{seed, Error, ImageId, Result, SaliencyMap, SubjectId};

/// Weighted undirected graph over subjects, stored as a dense symmetric
/// matrix with an empty diagonal. Nodes are kept sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectGraph {
    nodes: Vec<SubjectId>,
    weights: Vec<f64>,
}

impl SubjectGraph {
    pub fn new(mut nodes: Vec<SubjectId>) -> Self {
        nodes.sort();
        nodes.dedup();
        let n = nodes.len();
        Self {
            nodes,
            weights: vec![0.0; n * n],
        }
    }

    pub fn nodes(&self) -> &[SubjectId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, s: &SubjectId) -> Option<usize> {
        self.nodes.binary_search(s).ok()
    }

    /// Adds `w` to the edge `{i, j}`. Self-loops are ignored.
    pub fn add_weight(&mut self, i: usize, j: usize, w: f64) {
        assert!(
            w.is_finite() && w >= 0.0,
            "edge weight must be finite and non-negative"
        );
        if i == j {
            return;
        }
        let n = self.len();
        self.weights[i * n + j] += w;
        self.weights[j * n + i] += w;
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.len() + j]
    }

    pub fn weight_between(&self, a: &SubjectId, b: &SubjectId) -> f64 {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.weight(i, j),
            _ => 0.0,
        }
    }

    /// Sum of weights over unordered pairs.
    pub fn total_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    pub fn degree(&self, i: usize) -> f64 {
        let n = self.len();
        self.weights[i * n..(i + 1) * n].iter().sum()
    }

    /// Edges `(i, j, w)` with `i < j` and `w > 0`, row-major.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| {
            (i + 1..n).filter_map(move |j| {
                let w = self.weight(i, j);
                (w > 0.0).then_some((i, j, w))
            })
        })
    }
}

/// Newman-Girvan weighted modularity (resolution 1).
pub fn modularity(g: &SubjectGraph, c: &Clustering) -> Result<f64> {
    if c.subjects().ne(g.nodes().iter()) {
        return Err(Error::InvalidClustering(
            "clustering does not cover exactly the graph's nodes".into(),
        ));
    }
    let m = g.total_weight();
    if m <= 0.0 {
        return Err(Error::ZeroWeightGraph);
    }
    let labels: Vec<usize> = g.nodes().iter().map(|s| c.cluster_of(s).unwrap()).collect();
    let mut internal = vec![0.0; c.n()];
    let mut tot = vec![0.0; c.n()];
    for (i, &l) in labels.iter().enumerate() {
        tot[l] += g.degree(i);
    }
    for (i, j, w) in g.edges() {
        if labels[i] == labels[j] {
            internal[labels[i]] += 2.0 * w;
        }
    }
    let two_m = 2.0 * m;
    Ok(internal
        .iter()
        .zip(&tot)
        .map(|(&a, &t)| a / two_m - (t / two_m).powi(2))
        .sum())
}

/// Network construction output. `sampled_images` is sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub graph: SubjectGraph,
    pub sampled_images: Vec<ImageId>,
}

/// Uniform sample of `size` images without replacement, seeded, returned
/// sorted. Input order does not matter.
pub fn sample_images(images: &[ImageId], size: usize, run_seed: u64) -> Result<Vec<ImageId>> {
    let mut pool = images.to_vec();
    pool.sort();
    pool.dedup();
    if size == 0 || size > pool.len() {
        return Err(Error::Config(format!(
            "sample size {size} must be between 1 and the {} available images",
            pool.len()
        )));
    }
    pool.shuffle(&mut seed::rng_for(run_seed, "image-sample"));
    pool.truncate(size);
    pool.sort();
    Ok(pool)
}

/// Seed used for the per-image K-Means run on `image`.
pub fn image_seed(run_seed: u64, image: &ImageId) -> u64 {
    seed::derive(run_seed, image.as_str())
}

/// Seed used for the feature K-Means run.
pub fn feature_seed(run_seed: u64) -> u64 {
    seed::derive(run_seed, "feature-kmeans")
}

fn add_co_clustered(g: &mut SubjectGraph, labels: &[usize], w: f64) {
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            if labels[i] == labels[j] {
                g.add_weight(i, j, w);
            }
        }
    }
}

/// Accumulates co-clustering evidence into a graph over sorted `nodes`:
/// +1 per image in which a pair shares a label, then `+feature_weight` if
/// the pair shares a feature label. Labels are indexed like `nodes`.
pub fn co_occurrence_graph(
    nodes: Vec<SubjectId>,
    image_labels: &[Vec<usize>],
    feature_labels: Option<&[usize]>,
    feature_weight: f64,
) -> SubjectGraph {
    let mut graph = SubjectGraph::new(nodes);
    for labels in image_labels {
        add_co_clustered(&mut graph, labels, 1.0);
    }
    if let Some(labels) = feature_labels {
        if feature_weight > 0.0 {
            add_co_clustered(&mut graph, labels, feature_weight);
        }
    }
    graph
}

/// Builds the subject similarity network: +1 for every pair co-clustered
/// by the per-image K-Means over sampled images, then `+W` for every pair
/// co-clustered by K-Means over the feature subvectors.
pub fn build_network(
    psm: &BTreeMap<(SubjectId, ImageId), SaliencyMap>,
    features: &BTreeMap<SubjectId, FeatureVector>,
    subjects: &[SubjectId],
    images: &[ImageId],
    cfg: &ClusteringConfig,
) -> Result<Network> {
    cfg.validate()?;
    let nodes = SubjectGraph::new(subjects.to_vec()).nodes().to_vec();
    if nodes.is_empty() {
        return Err(Error::Empty("no subjects"));
    }
    for s in &nodes {
        if !features.contains_key(s) {
            return Err(Error::MissingFeatures(s.to_string()));
        }
    }
    let sampled = sample_images(images, cfg.sample_size, cfg.seed)?;
    let k = cfg.k.min(nodes.len());
    let (w, h) = cfg.map_resolution;

    let per_image = crate::par_map(&sampled, |img| -> Result<Vec<usize>> {
        let points = nodes
            .iter()
            .map(|s| {
                let m = psm
                    .get(&(s.clone(), img.clone()))
                    .ok_or_else(|| Error::MissingMap {
                        subject: s.to_string(),
                        image: img.to_string(),
                    })?;
                Ok(resize_map(m, w, h)?.into_values())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(kmeans(&points, k, image_seed(cfg.seed, img))?.assignment)
    });
    let image_labels = per_image.into_iter().collect::<Result<Vec<_>>>()?;

    let mut feature_labels = None;
    if cfg.feature_weight > 0.0 && !cfg.feature_categories.is_empty() {
        let points: Vec<Vec<f64>> = nodes
            .iter()
            .map(|s| {
                features[s]
                    .subvector(&cfg.feature_categories)
                    .into_iter()
                    .map(f64::from)
                    .collect()
            })
            .collect();
        feature_labels = Some(kmeans(&points, k, feature_seed(cfg.seed))?.assignment);
    }

    Ok(Network {
        graph: co_occurrence_graph(
            nodes,
            &image_labels,
            feature_labels.as_deref(),
            cfg.feature_weight,
        ),
        sampled_images: sampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<SubjectId> {
        (0..n)
            .map(|i| SubjectId::from(format!("s{i}").as_str()))
            .collect()
    }

    fn triangles() -> SubjectGraph {
        let mut g = SubjectGraph::new(ids(6));
        for (a, b) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)] {
            g.add_weight(a, b, 1.0);
        }
        g
    }

    #[test]
    fn graph_is_symmetric_without_self_loops() {
        let mut g = SubjectGraph::new(ids(3));
        g.add_weight(0, 1, 2.0);
        g.add_weight(1, 1, 5.0);
        assert_eq!(g.weight(1, 0), 2.0);
        assert_eq!(g.weight(1, 1), 0.0);
        assert_eq!(g.total_weight(), 2.0);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 2.0)]);
    }

    #[test]
    fn modularity_of_two_triangles() {
        let g = triangles();
        let c = Clustering::from_labels(&ids(6), &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((modularity(&g, &c).unwrap() - 0.5).abs() < 1e-12);
        let one = Clustering::all_in_one(&ids(6));
        assert!(modularity(&g, &one).unwrap().abs() < 1e-12);
    }

    #[test]
    fn modularity_errors() {
        let g = SubjectGraph::new(ids(3));
        assert!(matches!(
            modularity(&g, &Clustering::all_in_one(&ids(3))),
            Err(Error::ZeroWeightGraph)
        ));
        assert!(modularity(&triangles(), &Clustering::all_in_one(&ids(5))).is_err());
    }

    #[test]
    fn modularity_matches_direct_summation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let mut g = SubjectGraph::new(ids(6));
            for i in 0..6 {
                for j in i + 1..6 {
                    if rng.gen_bool(0.6) {
                        g.add_weight(i, j, rng.gen_range(0.1..3.0));
                    }
                }
            }
            if g.total_weight() == 0.0 {
                continue;
            }
            let labels: Vec<usize> = (0..6).map(|_| rng.gen_range(0..3)).collect();
            let c = Clustering::from_labels(&ids(6), &labels).unwrap();
            // (1/2m) sum_uv [A_uv - k_u k_v / 2m] delta(c_u, c_v)
            let m: f64 = g.total_weight();
            let k: Vec<f64> = (0..6)
                .map(|u| (0..6).map(|v| g.weight(u, v)).sum())
                .collect();
            let mut q = 0.0;
            for u in 0..6 {
                for v in 0..6 {
                    if labels[u] == labels[v] {
                        q += g.weight(u, v) - k[u] * k[v] / (2.0 * m);
                    }
                }
            }
            q /= 2.0 * m;
            assert!((modularity(&g, &c).unwrap() - q).abs() < 1e-12);
        }
    }

    #[test]
    fn co_occurrence_hand_example() {
        let nodes = ids(3);
        let images = vec![vec![0, 0, 1], vec![0, 0, 0]];
        let g = co_occurrence_graph(nodes.clone(), &images, None, 0.0);
        assert_eq!(
            (g.weight(0, 1), g.weight(0, 2), g.weight(1, 2)),
            (2.0, 1.0, 1.0)
        );
        let g = co_occurrence_graph(nodes.clone(), &images, Some(&[0, 1, 1]), 0.5);
        assert_eq!(
            (g.weight(0, 1), g.weight(0, 2), g.weight(1, 2)),
            (2.0, 1.0, 1.5)
        );
        let g0 = co_occurrence_graph(nodes, &images, Some(&[0, 1, 1]), 0.0);
        assert_eq!(g0, co_occurrence_graph(ids(3), &images, None, 0.0));
    }

    #[test]
    fn sampling_is_seeded_and_order_free() {
        let imgs: Vec<ImageId> = (0..20)
            .map(|i| ImageId::from(format!("i{i:02}").as_str()))
            .collect();
        let a = sample_images(&imgs, 5, 3).unwrap();
        let mut rev = imgs.clone();
        rev.reverse();
        assert_eq!(a, sample_images(&rev, 5, 3).unwrap());
        assert_eq!(a.len(), 5);
        assert!(sample_images(&imgs, 21, 3).is_err());
        assert!(sample_images(&imgs, 0, 3).is_err());
    }
}
