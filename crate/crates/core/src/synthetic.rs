//! Synthetic datasets with planted behaviour groups.
//!
//! Every image gets a shared base map made of a few Gaussian blobs. Each
//! group has one fixed bias blob that its members add to every base map;
//! subjects then add their own pixel noise. The universal map of an image
//! is its base map. Features are a random prototype per group with a
//! fraction of bits flipped per subject.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::clustering::{Clustering, FeatureSchema, FeatureVector};
use crate::pipeline::Dataset;
use crate::{seed, ImageId, Result, SaliencyMap, SubjectId};

/// Name of the universal method in generated datasets.
pub const UNIVERSAL_METHOD: &str = "base";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub groups: usize,
    pub subjects_per_group: usize,
    pub images: usize,
    pub width: usize,
    pub height: usize,
    /// Peak height of the group bias blob.
    pub bias_strength: f64,
    /// Standard deviation of per-pixel subject noise.
    pub noise: f64,
    /// Probability of flipping each feature bit away from the prototype.
    pub feature_flip: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            groups: 3,
            subjects_per_group: 10,
            images: 40,
            width: 32,
            height: 32,
            bias_strength: 0.5,
            noise: 0.05,
            feature_flip: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    /// Planted group of every subject.
    pub groups: BTreeMap<SubjectId, usize>,
}

impl SyntheticDataset {
    pub fn planted(&self) -> Clustering {
        Clustering::new(self.groups.clone()).expect("every group has members")
    }
}

fn blob(width: usize, height: usize, cx: f64, cy: f64, sigma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let (dx, dy) = (c as f64 - cx, r as f64 - cy);
            out.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
        }
    }
    out
}

fn subject_id(i: usize) -> SubjectId {
    SubjectId::from(format!("s{i:03}").as_str())
}

fn image_id(i: usize) -> ImageId {
    ImageId::from(format!("img{i:04}").as_str())
}

/// Generates a dataset. Subject `i` belongs to group `i % groups`.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    if spec.groups == 0 || spec.subjects_per_group == 0 || spec.images == 0 {
        return Err(crate::Error::Config(
            "groups, subjects and images must be non-zero".into(),
        ));
    }
    let (w, h) = (spec.width, spec.height);
    let n = w * h;
    let scale = w.min(h) as f64;

    let mut rng = seed::rng_for(spec.seed, "synthetic-base");
    let bases: Vec<Vec<f64>> = (0..spec.images)
        .map(|_| {
            let mut acc = vec![0.0; n];
            for _ in 0..3 {
                let cx = rng.gen_range(0.0..w as f64);
                let cy = rng.gen_range(0.0..h as f64);
                let sigma = scale * rng.gen_range(0.08..0.2);
                let amp = rng.gen_range(0.5..1.0);
                for (a, b) in acc.iter_mut().zip(blob(w, h, cx, cy, sigma)) {
                    *a += amp * b;
                }
            }
            let max = acc.iter().cloned().fold(0.0, f64::max);
            acc.iter().map(|v| 0.6 * v / max).collect()
        })
        .collect();

    // group blobs spread evenly on a ring around the centre
    let biases: Vec<Vec<f64>> = (0..spec.groups)
        .map(|g| {
            let angle = std::f64::consts::TAU * g as f64 / spec.groups as f64;
            let cx = w as f64 / 2.0 + 0.3 * w as f64 * angle.cos();
            let cy = h as f64 / 2.0 + 0.3 * h as f64 * angle.sin();
            blob(w, h, cx, cy, scale * 0.12)
                .into_iter()
                .map(|v| spec.bias_strength * v)
                .collect()
        })
        .collect();

    let schema = FeatureSchema::full();
    let mut frng = seed::rng_for(spec.seed, "synthetic-features");
    let prototypes: Vec<Vec<u8>> = (0..spec.groups)
        .map(|_| (0..schema.len()).map(|_| frng.gen_range(0..2u8)).collect())
        .collect();

    let total = spec.groups * spec.subjects_per_group;
    let subjects: Vec<SubjectId> = (0..total).map(subject_id).collect();
    let images: Vec<ImageId> = (0..spec.images).map(image_id).collect();
    let mut groups = BTreeMap::new();
    let mut features = BTreeMap::new();
    let mut psm = BTreeMap::new();
    for (i, s) in subjects.iter().enumerate() {
        let g = i % spec.groups;
        groups.insert(s.clone(), g);
        let entries = prototypes[g]
            .iter()
            .map(|&b| {
                if frng.gen::<f64>() < spec.feature_flip {
                    1 - b
                } else {
                    b
                }
            })
            .collect();
        features.insert(s.clone(), FeatureVector::full(s.clone(), entries)?);

        let mut nrng = seed::rng_for(spec.seed, &format!("synthetic-noise-{s}"));
        for (img, base) in images.iter().zip(&bases) {
            let values = base
                .iter()
                .zip(&biases[g])
                .map(|(b, bias)| {
                    b + bias + spec.noise * Distribution::<f64>::sample(&StandardNormal, &mut nrng)
                })
                .collect();
            psm.insert(
                (s.clone(), img.clone()),
                SaliencyMap::from_clamped(w, h, values)?,
            );
        }
    }

    let universal = images
        .iter()
        .zip(bases)
        .map(|(img, b)| Ok((img.clone(), SaliencyMap::from_clamped(w, h, b)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;

    let dataset = Dataset::from_parts(
        psm,
        None,
        [(UNIVERSAL_METHOD.to_string(), universal)].into(),
        features,
    )?;
    Ok(SyntheticDataset { dataset, groups })
}
