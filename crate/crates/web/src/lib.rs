//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export has a plain Rust counterpart so the logic can be tested
//! natively.

use std::collections::BTreeMap;

use saliency_clusters::clustering::{subject_similarity_clustering, ClusteringConfig};
use saliency_clusters::map::blur_fixations;
use saliency_clusters::metrics::score_pair;
use saliency_clusters::synthetic::{generate, SyntheticSpec};
use saliency_clusters::{Error, FixationMap, Result, SaliencyMap};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn points(width: usize, height: usize, flat: &[u32]) -> Result<FixationMap> {
    if !flat.len().is_multiple_of(2) {
        return Err(Error::Config("fixations must be (row, col) pairs".into()));
    }
    FixationMap::new(
        width,
        height,
        flat.chunks_exact(2).map(|p| (p[0] as usize, p[1] as usize)),
    )
}

pub fn blur_points(width: usize, height: usize, fixations: &[u32], sigma: f64) -> Result<Vec<f64>> {
    Ok(blur_fixations(&points(width, height, fixations)?, sigma)?.into_values())
}

/// Scores `pred` against a ground-truth map and its fixations. Returns the
/// four metrics as a JSON object.
pub fn score_maps(
    width: usize,
    height: usize,
    pred: &[f64],
    gt: &[f64],
    fixations: &[u32],
) -> Result<String> {
    let pred = SaliencyMap::new(width, height, pred.to_vec())?;
    let gt = SaliencyMap::new(width, height, gt.to_vec())?;
    let s = score_pair(&pred, &gt, &points(width, height, fixations)?)?;
    Ok(serde_json::to_string(&s)?)
}

/// Generates a planted-group dataset, clusters its subjects and reports the
/// found clusters next to the planted groups.
pub fn cluster_planted(
    groups: usize,
    subjects_per_group: usize,
    images: usize,
    feature_weight: f64,
    seed: u64,
) -> Result<String> {
    let data = generate(&SyntheticSpec {
        groups,
        subjects_per_group,
        images,
        width: 24,
        height: 24,
        seed,
        ..SyntheticSpec::default()
    })?;
    let d = &data.dataset;
    let cfg = ClusteringConfig {
        feature_weight,
        sample_size: images,
        seed,
        ..ClusteringConfig::default()
    };
    let r = subject_similarity_clustering(&d.psm, &d.features, &d.subjects, &d.images, &cfg)?;
    let clusters: Vec<Vec<serde_json::Value>> = r
        .clustering
        .clusters()
        .iter()
        .map(|members| {
            members
                .iter()
                .map(|s| json!({ "subject": s.as_str(), "group": data.groups[s] }))
                .collect()
        })
        .collect();
    let pure = r
        .clustering
        .clusters()
        .iter()
        .filter(|m| {
            let gs: std::collections::BTreeSet<usize> = m.iter().map(|s| data.groups[s]).collect();
            gs.len() == 1
        })
        .count();
    let example: BTreeMap<&str, Vec<f64>> = [
        (
            "universal",
            d.universal
                .values()
                .next()
                .and_then(|u| u.values().next())
                .map(|m| m.flatten()),
        ),
        ("subject", d.psm.values().next().map(|m| m.flatten())),
    ]
    .into_iter()
    .filter_map(|(k, v)| v.map(|v| (k, v)))
    .collect();
    Ok(json!({
        "clusters": clusters,
        "modularity": r.modularity,
        "pure_clusters": pure,
        "recovered": r.clustering.n() == groups && pure == groups,
        "width": 24,
        "height": 24,
        "example": example,
    })
    .to_string())
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn blur(
    width: usize,
    height: usize,
    fixations: &[u32],
    sigma: f64,
) -> std::result::Result<Vec<f64>, JsError> {
    blur_points(width, height, fixations, sigma).map_err(js)
}

#[wasm_bindgen]
pub fn score(
    width: usize,
    height: usize,
    pred: &[f64],
    gt: &[f64],
    fixations: &[u32],
) -> std::result::Result<String, JsError> {
    score_maps(width, height, pred, gt, fixations).map_err(js)
}

#[wasm_bindgen(js_name = clusterPlanted)]
pub fn cluster_planted_js(
    groups: usize,
    subjects_per_group: usize,
    images: usize,
    feature_weight: f64,
    seed: u32,
) -> std::result::Result<String, JsError> {
    cluster_planted(
        groups,
        subjects_per_group,
        images,
        feature_weight,
        seed as u64,
    )
    .map_err(js)
}
