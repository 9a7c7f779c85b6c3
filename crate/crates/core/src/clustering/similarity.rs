//! Per-category feature similarity between subject pairs, summarised per
//! cluster and over all pairs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::features::{Category, FeatureVector};
use super::Clustering;
use crate::{Error, Result, SubjectId};

pub type CategoryPercentages = BTreeMap<Category, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSimilarityReport {
    pub categories: Vec<Category>,
    /// Mean pair similarity over all subject pairs.
    pub all_pairs_average: CategoryPercentages,
    /// Median pair similarity over all subject pairs.
    pub all_pairs_median: CategoryPercentages,
    /// Mean over intra-cluster pairs; `None` for single-member clusters.
    pub clusters: Vec<Option<CategoryPercentages>>,
    /// Mean of the cluster rows that have pairs.
    pub cluster_average: Option<CategoryPercentages>,
}

/// Percentage of matching entries in `category` for one pair.
pub fn pair_similarity(a: &FeatureVector, b: &FeatureVector, category: Category) -> f64 {
    let (x, y) = (a.subvector(&[category]), b.subvector(&[category]));
    if x.is_empty() {
        return 0.0;
    }
    let same = x.iter().zip(&y).filter(|(p, q)| p == q).count();
    same as f64 / x.len() as f64 * 100.0
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn pair_means(members: &[&FeatureVector], categories: &[Category]) -> Option<CategoryPercentages> {
    if members.len() < 2 {
        return None;
    }
    let mut out = CategoryPercentages::new();
    for &cat in categories {
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                sum += pair_similarity(members[i], members[j], cat);
                count += 1;
            }
        }
        out.insert(cat, sum / count as f64);
    }
    Some(out)
}

pub fn feature_similarity_report(
    features: &BTreeMap<SubjectId, FeatureVector>,
    clustering: &Clustering,
) -> Result<FeatureSimilarityReport> {
    if features.len() < 2 {
        return Err(Error::Empty(
            "feature similarity needs at least two subjects",
        ));
    }
    let categories: Vec<Category> = features
        .values()
        .next()
        .map(|f| f.schema().categories())
        .unwrap_or_default();
    let all: Vec<&FeatureVector> = features.values().collect();

    let all_pairs_average = pair_means(&all, &categories).expect("at least two subjects");
    let mut all_pairs_median = CategoryPercentages::new();
    for &cat in &categories {
        let mut values = Vec::with_capacity(all.len() * (all.len() - 1) / 2);
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                values.push(pair_similarity(all[i], all[j], cat));
            }
        }
        all_pairs_median.insert(cat, median(values));
    }

    let mut clusters = Vec::with_capacity(clustering.n());
    for members in clustering.clusters() {
        let vecs = members
            .iter()
            .map(|s| {
                features
                    .get(s)
                    .ok_or_else(|| Error::MissingFeatures(s.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        clusters.push(pair_means(&vecs, &categories));
    }

    let with_pairs: Vec<&CategoryPercentages> = clusters.iter().flatten().collect();
    let cluster_average = (!with_pairs.is_empty()).then(|| {
        categories
            .iter()
            .map(|&c| {
                let mean =
                    with_pairs.iter().map(|row| row[&c]).sum::<f64>() / with_pairs.len() as f64;
                (c, mean)
            })
            .collect()
    });

    Ok(FeatureSimilarityReport {
        categories,
        all_pairs_average,
        all_pairs_median,
        clusters,
        cluster_average,
    })
}
