//! Per-cluster translators from universal saliency maps to cluster-style
//! maps, the source/target datasets they are fitted on, and the shared
//! train/test split.
//!
//! Translators are closed-form: `identity`, `mean_discrepancy` (add the mean
//! residual between target and source) and `affine` (least-squares gain and
//! bias plus the mean residual). Outputs are clamped to `[0, 1]`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::map::{average_maps, resize_map};
use crate::{seed, Error, ImageId, Result, SaliencyMap, SubjectId};

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationPair {
    pub image: ImageId,
    pub source: SaliencyMap,
    pub target: SaliencyMap,
}

/// Source/target pairs for one cluster, sorted by image id.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationDataset {
    pub cluster_id: usize,
    pub pairs: Vec<TranslationPair>,
}

impl TranslationDataset {
    pub fn new(cluster_id: usize, mut pairs: Vec<TranslationPair>) -> Result<Self> {
        pairs.sort_by(|a, b| a.image.cmp(&b.image));
        if pairs.windows(2).any(|w| w[0].image == w[1].image) {
            return Err(Error::Config(
                "duplicate image in translation dataset".into(),
            ));
        }
        for p in &pairs {
            p.source.check_same_dims(&p.target)?;
        }
        Ok(Self { cluster_id, pairs })
    }

    /// Keeps only pairs whose image is in `images`.
    pub fn restricted_to(&self, images: &[ImageId]) -> TranslationDataset {
        TranslationDataset {
            cluster_id: self.cluster_id,
            pairs: self
                .pairs
                .iter()
                .filter(|p| images.contains(&p.image))
                .cloned()
                .collect(),
        }
    }

    pub fn images(&self) -> impl Iterator<Item = &ImageId> {
        self.pairs.iter().map(|p| &p.image)
    }
}

/// Cluster-average target per image, paired with the universal map resized
/// to the target's dimensions.
pub fn build_translation_dataset(
    cluster_id: usize,
    universal: &BTreeMap<ImageId, SaliencyMap>,
    psm: &BTreeMap<(SubjectId, ImageId), SaliencyMap>,
    members: &[SubjectId],
    images: &[ImageId],
) -> Result<TranslationDataset> {
    if members.is_empty() {
        return Err(Error::Empty("cluster has no members"));
    }
    let mut pairs = Vec::with_capacity(images.len());
    for img in images {
        let maps = members
            .iter()
            .map(|s| {
                psm.get(&(s.clone(), img.clone()))
                    .ok_or_else(|| Error::MissingMap {
                        subject: s.to_string(),
                        image: img.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let target = average_maps(&maps)?;
        let u = universal.get(img).ok_or_else(|| Error::MissingUniversal {
            method: "<universal>".into(),
            image: img.to_string(),
        })?;
        let source = resize_map(u, target.width(), target.height())?;
        pairs.push(TranslationPair {
            image: img.clone(),
            source,
            target,
        });
    }
    TranslationDataset::new(cluster_id, pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<ImageId>,
    pub test: Vec<ImageId>,
}

/// Seeded shuffle of the sorted image list; the first
/// `ceil(test_fraction * n)` images form the test set. Both halves are
/// returned sorted and each holds at least one image.
pub fn split(images: &[ImageId], spec: SplitSpec) -> Result<Split> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must be in (0, 1), got {}",
            spec.test_fraction
        )));
    }
    let mut pool = images.to_vec();
    pool.sort();
    pool.dedup();
    if pool.len() < 2 {
        return Err(Error::Empty("a split needs at least two images"));
    }
    let n = pool.len();
    // tolerate representation error such as 0.2 * 1600 = 320.00000000000006
    let n_test = ((spec.test_fraction * n as f64) - 1e-9).ceil() as usize;
    let n_test = n_test.clamp(1, n - 1);
    pool.shuffle(&mut seed::rng_for(spec.seed, "train-test-split"));
    let mut test = pool[..n_test].to_vec();
    let mut train = pool[n_test..].to_vec();
    test.sort();
    train.sort();
    Ok(Split { train, test })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslatorKind {
    Identity,
    MeanDiscrepancy,
    Affine,
}

impl fmt::Display for TranslatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TranslatorKind::Identity => "identity",
            TranslatorKind::MeanDiscrepancy => "mean_discrepancy",
            TranslatorKind::Affine => "affine",
        })
    }
}

impl FromStr for TranslatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(TranslatorKind::Identity),
            "mean_discrepancy" | "mean-discrepancy" => Ok(TranslatorKind::MeanDiscrepancy),
            "affine" => Ok(TranslatorKind::Affine),
            _ => Err(Error::Config(format!("unknown translator kind {s:?}"))),
        }
    }
}

/// Real-valued map (may be negative) at the translator's working resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ResidualMap {
    fn resampled_source(&self, source: &SaliencyMap) -> Result<SaliencyMap> {
        resize_map(source, self.width, self.height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Translator {
    Identity,
    MeanDiscrepancy {
        residual: ResidualMap,
    },
    Affine {
        gain: f64,
        bias: f64,
        residual: ResidualMap,
    },
}

fn common_dims(ds: &TranslationDataset) -> Result<(usize, usize)> {
    let first = ds.pairs.first().ok_or(Error::Empty("no training pairs"))?;
    let dims = first.target.dims();
    for p in &ds.pairs {
        if p.target.dims() != dims {
            return Err(Error::dims(dims, p.target.dims()));
        }
    }
    Ok(dims)
}

fn mean_residual(ds: &TranslationDataset, predict: impl Fn(f64) -> f64) -> ResidualMap {
    let (w, h) = ds.pairs[0].target.dims();
    let mut acc = vec![0.0; w * h];
    for p in &ds.pairs {
        for ((a, s), t) in acc.iter_mut().zip(p.source.values()).zip(p.target.values()) {
            *a += t - predict(*s);
        }
    }
    let n = ds.pairs.len() as f64;
    ResidualMap {
        width: w,
        height: h,
        values: acc.into_iter().map(|v| v / n).collect(),
    }
}

/// Least-squares `(gain, bias)` for `target ~ gain * source + bias` over all
/// training pixels. A constant source gives gain 1.
pub fn fit_affine(ds: &TranslationDataset) -> Result<(f64, f64)> {
    common_dims(ds)?;
    let (mut n, mut ss, mut st) = (0.0, 0.0, 0.0);
    for p in &ds.pairs {
        for (s, t) in p.source.values().iter().zip(p.target.values()) {
            n += 1.0;
            ss += s;
            st += t;
        }
    }
    let (ms, mt) = (ss / n, st / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for p in &ds.pairs {
        for (s, t) in p.source.values().iter().zip(p.target.values()) {
            sxx += (s - ms) * (s - ms);
            sxy += (s - ms) * (t - mt);
        }
    }
    let gain = if sxx > 0.0 { sxy / sxx } else { 1.0 };
    Ok((gain, mt - gain * ms))
}

pub fn fit_translator(kind: TranslatorKind, ds: &TranslationDataset) -> Result<Translator> {
    common_dims(ds)?;
    Ok(match kind {
        TranslatorKind::Identity => Translator::Identity,
        TranslatorKind::MeanDiscrepancy => Translator::MeanDiscrepancy {
            residual: mean_residual(ds, |s| s),
        },
        TranslatorKind::Affine => {
            let (gain, bias) = fit_affine(ds)?;
            Translator::Affine {
                gain,
                bias,
                residual: mean_residual(ds, |s| gain * s + bias),
            }
        }
    })
}

impl Translator {
    pub fn kind(&self) -> TranslatorKind {
        match self {
            Translator::Identity => TranslatorKind::Identity,
            Translator::MeanDiscrepancy { .. } => TranslatorKind::MeanDiscrepancy,
            Translator::Affine { .. } => TranslatorKind::Affine,
        }
    }

    pub fn resolution(&self) -> Option<(usize, usize)> {
        match self {
            Translator::Identity => None,
            Translator::MeanDiscrepancy { residual } | Translator::Affine { residual, .. } => {
                Some((residual.width, residual.height))
            }
        }
    }

    /// Maps a universal map to the cluster style. The source is resampled
    /// to the training resolution first.
    pub fn translate(&self, source: &SaliencyMap) -> Result<SaliencyMap> {
        let (gain, bias, residual) = match self {
            Translator::Identity => return Ok(source.clone()),
            Translator::MeanDiscrepancy { residual } => (1.0, 0.0, residual),
            Translator::Affine {
                gain,
                bias,
                residual,
            } => (*gain, *bias, residual),
        };
        let src = residual.resampled_source(source)?;
        let values = src
            .values()
            .iter()
            .zip(&residual.values)
            .map(|(s, d)| gain * s + bias + d)
            .collect();
        SaliencyMap::from_clamped(residual.width, residual.height, values)
    }

    /// Writes `<stem>.json` (kind, gain, bias, resolution, residual range)
    /// and, for fitted kinds, `<stem>.png` holding the residual rescaled by
    /// `(D - min) / (max - min)` as 16-bit grayscale.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let mut manifest = TranslatorManifest {
            kind: self.kind(),
            gain: 1.0,
            bias: 0.0,
            resolution: self.resolution(),
            residual_min: 0.0,
            residual_max: 0.0,
            residual_file: None,
        };
        if let Translator::Affine { gain, bias, .. } = self {
            manifest.gain = *gain;
            manifest.bias = *bias;
        }
        if let Translator::MeanDiscrepancy { residual } | Translator::Affine { residual, .. } = self
        {
            let (lo, hi) = residual
                .values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                    (a.min(v), b.max(v))
                });
            manifest.residual_min = lo;
            manifest.residual_max = hi;
            let span = hi - lo;
            let buf: Vec<u16> = residual
                .values
                .iter()
                .map(|&v| {
                    if span > 0.0 {
                        (((v - lo) / span) * 65535.0).round() as u16
                    } else {
                        0
                    }
                })
                .collect();
            let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(
                residual.width as u32,
                residual.height as u32,
                buf,
            )
            .expect("buffer matches dimensions");
            let file = format!("{stem}.png");
            img.save(dir.join(&file))?;
            manifest.residual_file = Some(file);
        }
        std::fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_vec_pretty(&manifest)?,
        )?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Translator> {
        let manifest: TranslatorManifest =
            serde_json::from_slice(&std::fs::read(dir.join(format!("{stem}.json")))?)?;
        let residual = match &manifest.residual_file {
            None => None,
            Some(file) => {
                let img = image::open(dir.join(file))?.into_luma16();
                let (w, h) = (img.width() as usize, img.height() as usize);
                let span = manifest.residual_max - manifest.residual_min;
                let values = img
                    .into_raw()
                    .into_iter()
                    .map(|v| manifest.residual_min + f64::from(v) / 65535.0 * span)
                    .collect();
                Some(ResidualMap {
                    width: w,
                    height: h,
                    values,
                })
            }
        };
        let need = || Error::Config(format!("translator {stem} is missing its residual map"));
        Ok(match manifest.kind {
            TranslatorKind::Identity => Translator::Identity,
            TranslatorKind::MeanDiscrepancy => Translator::MeanDiscrepancy {
                residual: residual.ok_or_else(need)?,
            },
            TranslatorKind::Affine => Translator::Affine {
                gain: manifest.gain,
                bias: manifest.bias,
                residual: residual.ok_or_else(need)?,
            },
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TranslatorManifest {
    kind: TranslatorKind,
    gain: f64,
    bias: f64,
    resolution: Option<(usize, usize)>,
    residual_min: f64,
    residual_max: f64,
    residual_file: Option<String>,
}
