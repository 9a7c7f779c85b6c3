//! End-to-end orchestration: cluster, split, fit, translate, evaluate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, DatasetManifest};
use crate::clustering::{
    feature_similarity_report, random_clustering, subject_similarity_clustering, Clustering,
    ClusteringConfig, FeatureSimilarityReport,
};
use crate::metrics::{evaluate_cluster, evaluate_person, GroundTruth, MetricScores};
use crate::translation::{
    build_translation_dataset, fit_translator, split, Split, SplitSpec, TranslatorKind,
};
use crate::{Error, ImageId, Result, SaliencyMap, SubjectId};

/// Cluster count of the random-assignment baseline.
pub const RANDOM_ASSIGN_CLUSTERS: usize = 3;

/// How subjects are grouped for one row block of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// `Setting0` .. `Setting6`.
    Preset(usize),
    Custom(ClusteringConfig),
    AllInOne,
    RandomAssign {
        clusters: usize,
    },
}

impl Setting {
    pub fn label(&self) -> String {
        match self {
            Setting::Preset(i) => format!("Setting{i}"),
            Setting::Custom(_) => "custom".into(),
            Setting::AllInOne => "all_in_one".into(),
            Setting::RandomAssign { .. } => "random_assign".into(),
        }
    }

    /// Clustering configuration for the similarity settings, with the run
    /// seed applied.
    pub fn clustering_config(&self, seed: u64) -> Result<Option<ClusteringConfig>> {
        Ok(match self {
            Setting::Preset(i) => Some(ClusteringConfig::preset(*i, seed)?),
            Setting::Custom(cfg) => Some(ClusteringConfig {
                seed,
                ..cfg.clone()
            }),
            Setting::AllInOne | Setting::RandomAssign { .. } => None,
        })
    }

    /// All seven presets in order.
    pub fn presets() -> Vec<Setting> {
        (0..crate::clustering::PRESET_FEATURE_WEIGHTS.len())
            .map(Setting::Preset)
            .collect()
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Setting {
    type Err = Error;

    /// Parses `Setting0`..`Setting6`, `all_in_one` and `random_assign`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all_in_one" => Ok(Setting::AllInOne),
            "random_assign" => Ok(Setting::RandomAssign {
                clusters: RANDOM_ASSIGN_CLUSTERS,
            }),
            _ => {
                let idx = s
                    .strip_prefix("Setting")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&i| i < crate::clustering::PRESET_FEATURE_WEIGHTS.len())
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "unknown setting {s:?}; expected Setting0..Setting6, all_in_one or random_assign"
                        ))
                    })?;
                Ok(Setting::Preset(idx))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub settings: Vec<Setting>,
    pub translator: TranslatorKind,
    pub test_fraction: f64,
    pub universal_method: String,
    /// Global seed: image sample, K-Means, Louvain, split and baselines.
    pub seed: u64,
    /// Fit and evaluate on every image. Only meant for sanity checks.
    pub train_equals_test: bool,
}

impl RunConfig {
    pub fn new(settings: Vec<Setting>, universal_method: impl Into<String>) -> Self {
        Self {
            settings,
            translator: TranslatorKind::MeanDiscrepancy,
            test_fraction: SplitSpec::default().test_fraction,
            universal_method: universal_method.into(),
            seed: 0,
            train_equals_test: false,
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            test_fraction: self.test_fraction,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Clustered,
    Universal,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Clustered => "Clustered",
            Method::Universal => "Universal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub setting: String,
    /// `None` for the setting's Average row.
    pub cluster: Option<usize>,
    pub method: Method,
    pub scores: MetricScores,
    pub persons: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingReport {
    pub setting: String,
    pub clustering: Clustering,
    pub modularity: Option<f64>,
    /// Per-cluster rows, Clustered then Universal for each cluster, followed
    /// by the two Average rows.
    pub rows: Vec<ReportRow>,
    pub feature_similarity: Option<FeatureSimilarityReport>,
}

impl SettingReport {
    pub fn cluster_rows(&self, method: Method) -> impl Iterator<Item = &ReportRow> {
        self.rows
            .iter()
            .filter(move |r| r.method == method && r.cluster.is_some())
    }

    pub fn average(&self, method: Method) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.cluster.is_none())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingManifest {
    pub setting: String,
    /// Effective clustering parameters; `None` for the baselines.
    pub config: Option<ClusteringConfig>,
    pub sampled_images: Option<Vec<ImageId>>,
    pub clustering: Clustering,
    pub skipped_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub translator: TranslatorKind,
    pub universal_method: String,
    pub test_fraction: f64,
    pub train_equals_test: bool,
    pub split: Split,
    pub dataset: DatasetManifest,
    pub derived_fixations: bool,
    pub settings: Vec<SettingManifest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub settings: Vec<SettingReport>,
    /// Universal-map scores of each subject on the test images. These do
    /// not depend on any clustering.
    pub universal_by_subject: BTreeMap<SubjectId, Option<MetricScores>>,
    pub manifest: RunManifest,
}

impl EvaluationReport {
    pub fn setting(&self, label: &str) -> Option<&SettingReport> {
        self.settings.iter().find(|s| s.setting == label)
    }
}

/// Lowers the image sample size to the number of available images.
pub fn effective_config(cfg: &ClusteringConfig, n_images: usize) -> ClusteringConfig {
    ClusteringConfig {
        sample_size: cfg.sample_size.min(n_images),
        ..cfg.clone()
    }
}

struct ClusterOutcome {
    clustered: ReportRow,
    universal: ReportRow,
}

fn evaluate_setting(
    dataset: &Dataset,
    cfg: &RunConfig,
    setting: &Setting,
    split: &Split,
    universal: &BTreeMap<ImageId, SaliencyMap>,
) -> Result<(SettingReport, SettingManifest)> {
    let label = setting.label();
    let config = setting
        .clustering_config(cfg.seed)?
        .map(|c| effective_config(&c, dataset.images.len()));

    let (clustering, modularity, sampled) = match (setting, &config) {
        (_, Some(c)) => {
            let r = subject_similarity_clustering(
                &dataset.psm,
                &dataset.features,
                &dataset.subjects,
                &dataset.images,
                c,
            )
            .map_err(|e| e.in_stage("clustering"))?;
            (r.clustering, r.modularity, Some(r.network.sampled_images))
        }
        (Setting::RandomAssign { clusters }, None) => (
            random_clustering(&dataset.subjects, *clusters, cfg.seed)
                .map_err(|e| e.in_stage("clustering"))?,
            None,
            None,
        ),
        (_, None) => (Clustering::all_in_one(&dataset.subjects), None, None),
    };

    let gt = GroundTruth {
        maps: &dataset.psm,
        fixations: &dataset.fixations,
    };
    let clusters = clustering.clusters();
    let indexed: Vec<(usize, &Vec<SubjectId>)> = clusters.iter().enumerate().collect();
    let outcomes = crate::par_map(&indexed, |&(c, members)| -> Result<ClusterOutcome> {
        let train = build_translation_dataset(c, universal, &dataset.psm, members, &split.train)
            .map_err(|e| e.in_stage("translation"))?;
        if !cfg.train_equals_test && train.images().any(|i| split.test.binary_search(i).is_ok()) {
            return Err(
                Error::Config("test image leaked into a translation dataset".into())
                    .in_stage("translation"),
            );
        }
        let translator =
            fit_translator(cfg.translator, &train).map_err(|e| e.in_stage("translation"))?;
        let preds = split
            .test
            .iter()
            .map(|i| Ok((i.clone(), translator.translate(&universal[i])?)))
            .collect::<Result<BTreeMap<_, _>>>()
            .map_err(|e| e.in_stage("translation"))?;
        let row = |method: Method, preds: &BTreeMap<ImageId, SaliencyMap>| -> Result<ReportRow> {
            let e = evaluate_cluster(c, &method.to_string(), preds, members, gt, &split.test)
                .map_err(|e| e.in_stage("evaluation"))?;
            Ok(ReportRow {
                setting: label.clone(),
                cluster: Some(c),
                method,
                scores: e.scores,
                persons: e.person_count,
                skipped: e.skipped,
            })
        };
        Ok(ClusterOutcome {
            clustered: row(Method::Clustered, &preds)?,
            universal: row(Method::Universal, universal)?,
        })
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(outcomes.len() * 2 + 2);
    for o in &outcomes {
        rows.push(o.clustered.clone());
        rows.push(o.universal.clone());
    }
    for method in [Method::Clustered, Method::Universal] {
        let of_method: Vec<&ReportRow> = rows.iter().filter(|r| r.method == method).collect();
        let scores: Vec<MetricScores> = of_method.iter().map(|r| r.scores).collect();
        let average = ReportRow {
            setting: label.clone(),
            cluster: None,
            method,
            scores: MetricScores::mean(&scores).expect("at least one cluster"),
            persons: of_method.iter().map(|r| r.persons).sum(),
            skipped: of_method.iter().map(|r| r.skipped).sum(),
        };
        rows.push(average);
    }
    let skipped_pairs = outcomes.iter().map(|o| o.clustered.skipped).sum();

    let feature_similarity = if dataset.features.len() >= 2 {
        Some(feature_similarity_report(&dataset.features, &clustering)?)
    } else {
        None
    };

    Ok((
        SettingReport {
            setting: label.clone(),
            clustering: clustering.clone(),
            modularity,
            rows,
            feature_similarity,
        },
        SettingManifest {
            setting: label,
            config,
            sampled_images: sampled,
            clustering,
            skipped_pairs,
        },
    ))
}

/// Runs every configured setting on `dataset` and collects the report.
pub fn run_pipeline(cfg: &RunConfig, dataset: &Dataset) -> Result<EvaluationReport> {
    if cfg.settings.is_empty() {
        return Err(Error::Config("no settings to run".into()));
    }
    let universal = dataset.universal_for(&cfg.universal_method)?;
    let split = if cfg.train_equals_test {
        Split {
            train: dataset.images.clone(),
            test: dataset.images.clone(),
        }
    } else {
        split(&dataset.images, cfg.split_spec()).map_err(|e| e.in_stage("split"))?
    };

    let gt = GroundTruth {
        maps: &dataset.psm,
        fixations: &dataset.fixations,
    };
    let universal_by_subject = dataset
        .subjects
        .iter()
        .map(|s| {
            Ok((
                s.clone(),
                evaluate_person(universal, s, gt, &split.test)?.scores,
            ))
        })
        .collect::<Result<BTreeMap<_, _>>>()
        .map_err(|e| e.in_stage("evaluation"))?;

    let mut settings = Vec::with_capacity(cfg.settings.len());
    let mut manifests = Vec::with_capacity(cfg.settings.len());
    for setting in &cfg.settings {
        let (r, m) = evaluate_setting(dataset, cfg, setting, &split, universal)?;
        settings.push(r);
        manifests.push(m);
    }

    Ok(EvaluationReport {
        settings,
        universal_by_subject,
        manifest: RunManifest {
            seed: cfg.seed,
            translator: cfg.translator,
            universal_method: cfg.universal_method.clone(),
            test_fraction: cfg.test_fraction,
            train_equals_test: cfg.train_equals_test,
            split,
            dataset: dataset.manifest(),
            derived_fixations: dataset.derived_fixations,
            settings: manifests,
        },
    })
}
