//! Placing a new subject into an existing cluster.
//!
//! Each known saliency map votes +1 for the cluster whose average map is
//! nearest in L1. The cluster whose mean feature subvector is nearest in L1
//! to the subject's features receives the feature weight `W`. The subject
//! joins the cluster with the highest total. Ties go to the lowest cluster
//! index throughout.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::{
    subject_similarity_clustering, Category, Clustering, ClusteringConfig, FeatureVector,
};
use crate::map::{average_maps, l1_distance, resize_map};
use crate::metrics::{evaluate_person, GroundTruth, MetricScores};
use crate::pipeline::{effective_config, Dataset};
use crate::translation::{
    build_translation_dataset, fit_translator, split, SplitSpec, TranslatorKind,
};
use crate::{Error, ImageId, Result, SaliencyMap, SubjectId};

/// What is known about a new subject.
#[derive(Debug, Clone, PartialEq)]
pub struct NewPersonProfile {
    pub subject: SubjectId,
    /// Features restricted to the categories available for this subject.
    pub features: FeatureVector,
    /// Saliency maps for images of the reference dataset; may be empty.
    pub known_maps: BTreeMap<ImageId, SaliencyMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessScores {
    pub per_cluster: Vec<f64>,
    /// Image votes per cluster; sums to the number of known maps.
    pub image_votes: Vec<usize>,
    /// Cluster that received the feature vote, if one was cast.
    pub feature_vote: Option<usize>,
}

fn argmin(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Mean feature subvector of each cluster over `categories`.
pub fn cluster_feature_means(
    clustering: &Clustering,
    features: &BTreeMap<SubjectId, FeatureVector>,
    categories: &[Category],
) -> Result<Vec<Vec<f64>>> {
    clustering
        .clusters()
        .iter()
        .map(|members| {
            let mut acc: Vec<f64> = Vec::new();
            for s in members {
                let sub = features
                    .get(s)
                    .ok_or_else(|| Error::MissingFeatures(s.to_string()))?
                    .subvector(categories);
                if acc.is_empty() {
                    acc = vec![0.0; sub.len()];
                }
                for (a, v) in acc.iter_mut().zip(sub) {
                    *a += f64::from(v);
                }
            }
            let n = members.len() as f64;
            Ok(acc.into_iter().map(|v| v / n).collect())
        })
        .collect()
}

pub fn closeness(
    profile: &NewPersonProfile,
    clustering: &Clustering,
    avgsal: &BTreeMap<(usize, ImageId), SaliencyMap>,
    features: &BTreeMap<SubjectId, FeatureVector>,
    feature_weight: f64,
) -> Result<ClosenessScores> {
    let categories = profile.features.schema().categories();
    let use_features = feature_weight > 0.0 && !categories.is_empty();
    if profile.known_maps.is_empty() && !use_features {
        return Err(Error::NoAssignmentEvidence);
    }
    let n = clustering.n();
    let mut per_cluster = vec![0.0; n];
    let mut image_votes = vec![0usize; n];

    for (img, map) in &profile.known_maps {
        let distances = (0..n)
            .map(|c| {
                let avg = avgsal.get(&(c, img.clone())).ok_or_else(|| {
                    Error::Config(format!("no average map for cluster {c}, image {img}"))
                })?;
                let m = resize_map(map, avg.width(), avg.height())?;
                l1_distance(&m, avg)
            })
            .collect::<Result<Vec<f64>>>()?;
        let c = argmin(distances);
        image_votes[c] += 1;
        per_cluster[c] += 1.0;
    }

    let mut feature_vote = None;
    if use_features {
        let own: Vec<f64> = profile
            .features
            .entries()
            .iter()
            .map(|&v| f64::from(v))
            .collect();
        let means = cluster_feature_means(clustering, features, &categories)?;
        let c = argmin(
            means
                .iter()
                .map(|m| m.iter().zip(&own).map(|(a, b)| (a - b).abs()).sum::<f64>()),
        );
        per_cluster[c] += feature_weight;
        feature_vote = Some(c);
    }

    Ok(ClosenessScores {
        per_cluster,
        image_votes,
        feature_vote,
    })
}

/// Cluster with the highest closeness; ties go to the lowest index.
pub fn assign(scores: &ClosenessScores) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in scores.per_cluster.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Features plus the subject's maps on the test images.
    FeaturesAndMaps,
    FeaturesOnly,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::FeaturesAndMaps => "features_and_maps",
            Scenario::FeaturesOnly => "features_only",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "features_and_maps" => Ok(Scenario::FeaturesAndMaps),
            "features_only" => Ok(Scenario::FeaturesOnly),
            _ => Err(Error::Config(format!("unknown scenario {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutConfig {
    pub clustering: ClusteringConfig,
    pub translator: TranslatorKind,
    pub split: SplitSpec,
    pub universal_method: String,
    /// Feature weight for the closeness vote; defaults to the clustering W.
    pub vote_weight: Option<f64>,
}

impl HoldoutConfig {
    pub fn new(clustering: ClusteringConfig, universal_method: impl Into<String>) -> Self {
        let split = SplitSpec {
            seed: clustering.seed,
            ..SplitSpec::default()
        };
        Self {
            clustering,
            translator: TranslatorKind::MeanDiscrepancy,
            split,
            universal_method: universal_method.into(),
            vote_weight: None,
        }
    }

    fn vote_weight(&self) -> f64 {
        self.vote_weight.unwrap_or(self.clustering.feature_weight)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutSubject {
    pub subject: SubjectId,
    /// Clustering of the remaining subjects.
    pub clusters: Vec<Vec<SubjectId>>,
    pub closeness: ClosenessScores,
    pub chosen: usize,
    /// Clustered prediction scores for every cluster, indexed by cluster.
    pub per_cluster: Vec<Option<MetricScores>>,
    pub chosen_scores: Option<MetricScores>,
    /// Mean over the non-chosen clusters; `None` with a single cluster.
    pub non_chosen_scores: Option<MetricScores>,
    pub universal_scores: Option<MetricScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: MetricScores,
    pub std: MetricScores,
    pub count: usize,
}

impl MeanStd {
    fn of(scores: &[MetricScores]) -> Option<MeanStd> {
        Some(MeanStd {
            mean: MetricScores::mean(scores)?,
            std: MetricScores::std_dev(scores)?,
            count: scores.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub scenario: Scenario,
    /// Set when the subject's test-image maps were used to pick the
    /// cluster that is then evaluated on those same images.
    pub uses_test_maps: bool,
    pub test_images: Vec<ImageId>,
    pub subjects: Vec<HoldoutSubject>,
    pub chosen: Option<MeanStd>,
    pub non_chosen: Option<MeanStd>,
    pub universal: Option<MeanStd>,
}

/// Everything computed for one held-out subject that does not depend on
/// the scenario.
struct Fold {
    subject: SubjectId,
    clustering: Clustering,
    avgsal: BTreeMap<(usize, ImageId), SaliencyMap>,
    per_cluster: Vec<Option<MetricScores>>,
    universal: Option<MetricScores>,
}

struct Context<'a> {
    dataset: &'a Dataset,
    cfg: &'a HoldoutConfig,
    clustering: ClusteringConfig,
    universal: &'a BTreeMap<ImageId, SaliencyMap>,
    test: Vec<ImageId>,
    train: Vec<ImageId>,
}

impl<'a> Context<'a> {
    fn new(dataset: &'a Dataset, cfg: &'a HoldoutConfig) -> Result<Self> {
        if dataset.subjects.len() < 2 {
            return Err(Error::Empty("holdout needs at least two subjects"));
        }
        let s = split(&dataset.images, cfg.split)?;
        Ok(Context {
            dataset,
            cfg,
            clustering: effective_config(&cfg.clustering, dataset.images.len()),
            universal: dataset.universal_for(&cfg.universal_method)?,
            test: s.test,
            train: s.train,
        })
    }

    fn fold(&self, held: &SubjectId) -> Result<Fold> {
        let ds = self.dataset;
        let remaining: Vec<SubjectId> =
            ds.subjects.iter().filter(|s| *s != held).cloned().collect();
        let clustering = subject_similarity_clustering(
            &ds.psm,
            &ds.features,
            &remaining,
            &ds.images,
            &self.clustering,
        )?
        .clustering;
        let gt = GroundTruth {
            maps: &ds.psm,
            fixations: &ds.fixations,
        };

        let mut avgsal = BTreeMap::new();
        let mut per_cluster = Vec::with_capacity(clustering.n());
        for (c, members) in clustering.clusters().iter().enumerate() {
            for img in &self.test {
                let maps = members
                    .iter()
                    .map(|s| {
                        ds.psm
                            .get(&(s.clone(), img.clone()))
                            .ok_or_else(|| Error::MissingMap {
                                subject: s.to_string(),
                                image: img.to_string(),
                            })
                    })
                    .collect::<Result<Vec<_>>>()?;
                avgsal.insert((c, img.clone()), average_maps(&maps)?);
            }
            let train =
                build_translation_dataset(c, self.universal, &ds.psm, members, &self.train)?;
            let translator = fit_translator(self.cfg.translator, &train)?;
            let preds = self
                .test
                .iter()
                .map(|img| Ok((img.clone(), translator.translate(&self.universal[img])?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            per_cluster.push(evaluate_person(&preds, held, gt, &self.test)?.scores);
        }
        Ok(Fold {
            subject: held.clone(),
            clustering,
            avgsal,
            per_cluster,
            universal: evaluate_person(self.universal, held, gt, &self.test)?.scores,
        })
    }

    fn decide(&self, fold: &Fold, scenario: Scenario) -> Result<HoldoutSubject> {
        let ds = self.dataset;
        let features = ds
            .features
            .get(&fold.subject)
            .ok_or_else(|| Error::MissingFeatures(fold.subject.to_string()))?
            .restrict(&self.clustering.feature_categories);
        let known_maps = match scenario {
            Scenario::FeaturesOnly => BTreeMap::new(),
            Scenario::FeaturesAndMaps => self
                .test
                .iter()
                .map(|img| {
                    let key = (fold.subject.clone(), img.clone());
                    (img.clone(), ds.psm[&key].clone())
                })
                .collect(),
        };
        let profile = NewPersonProfile {
            subject: fold.subject.clone(),
            features,
            known_maps,
        };
        let scores = closeness(
            &profile,
            &fold.clustering,
            &fold.avgsal,
            &ds.features,
            self.cfg.vote_weight(),
        )?;
        let chosen = assign(&scores);
        let others: Vec<MetricScores> = fold
            .per_cluster
            .iter()
            .enumerate()
            .filter(|(c, _)| *c != chosen)
            .filter_map(|(_, s)| *s)
            .collect();
        Ok(HoldoutSubject {
            subject: fold.subject.clone(),
            clusters: fold.clustering.clusters(),
            closeness: scores,
            chosen,
            per_cluster: fold.per_cluster.clone(),
            chosen_scores: fold.per_cluster[chosen],
            non_chosen_scores: MetricScores::mean(&others),
            universal_scores: fold.universal,
        })
    }
}

/// Leave-one-out assignment experiment for one scenario.
pub fn holdout_experiment(
    dataset: &Dataset,
    cfg: &HoldoutConfig,
    scenario: Scenario,
) -> Result<HoldoutReport> {
    Ok(holdout_experiments(dataset, cfg, &[scenario])?.remove(0))
}

/// Leave-one-out assignment experiment. Each subject is held out in turn,
/// the rest are clustered and get per-cluster translators, and the subject
/// is assigned under every requested scenario. Folds are shared across
/// scenarios.
pub fn holdout_experiments(
    dataset: &Dataset,
    cfg: &HoldoutConfig,
    scenarios: &[Scenario],
) -> Result<Vec<HoldoutReport>> {
    let ctx = Context::new(dataset, cfg)?;
    let folds = crate::par_map(&dataset.subjects, |held| ctx.fold(held));
    let folds = folds.into_iter().collect::<Result<Vec<_>>>()?;

    scenarios
        .iter()
        .map(|&scenario| {
            let subjects = folds
                .iter()
                .map(|f| ctx.decide(f, scenario))
                .collect::<Result<Vec<_>>>()?;
            let collect = |f: fn(&HoldoutSubject) -> Option<MetricScores>| -> Vec<MetricScores> {
                subjects.iter().filter_map(f).collect()
            };
            Ok(HoldoutReport {
                scenario,
                uses_test_maps: scenario == Scenario::FeaturesAndMaps,
                test_images: ctx.test.clone(),
                chosen: MeanStd::of(&collect(|s| s.chosen_scores)),
                non_chosen: MeanStd::of(&collect(|s| s.non_chosen_scores)),
                universal: MeanStd::of(&collect(|s| s.universal_scores)),
                subjects,
            })
        })
        .collect()
}

/// Treats `subject` as a new person: clusters everyone else and reports
/// which cluster the subject would join.
pub fn assign_held_out(
    dataset: &Dataset,
    cfg: &HoldoutConfig,
    subject: &SubjectId,
    scenario: Scenario,
) -> Result<HoldoutSubject> {
    if !dataset.subjects.contains(subject) {
        return Err(Error::Config(format!("unknown subject {subject}")));
    }
    let ctx = Context::new(dataset, cfg)?;
    ctx.decide(&ctx.fold(subject)?, scenario)
}
