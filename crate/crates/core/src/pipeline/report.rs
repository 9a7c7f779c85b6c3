//! Report files and report comparison.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{EvaluationReport, Method, ReportRow};
use crate::clustering::similarity::CategoryPercentages;
use crate::clustering::Category;
use crate::metrics::Metric;
use crate::Result;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const FEATURES_CSV: &str = "features_similarity.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

fn cluster_label(row: &ReportRow) -> String {
    row.cluster
        .map_or_else(|| "Average".to_string(), |c| c.to_string())
}

fn report_csv(r: &EvaluationReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["setting", "cluster", "method"];
    header.extend(Metric::ALL.iter().map(|m| m.label()));
    header.extend(["persons", "skipped"]);
    w.write_record(&header)?;
    for s in &r.settings {
        for row in &s.rows {
            let mut rec = vec![
                row.setting.clone(),
                cluster_label(row),
                row.method.to_string(),
            ];
            rec.extend(
                Metric::ALL
                    .iter()
                    .map(|&m| format!("{:.4}", row.scores.get(m))),
            );
            rec.extend([row.persons.to_string(), row.skipped.to_string()]);
            w.write_record(&rec)?;
        }
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

fn features_csv(r: &EvaluationReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let categories: Vec<Category> = r
        .settings
        .iter()
        .find_map(|s| s.feature_similarity.as_ref())
        .map(|f| f.categories.clone())
        .unwrap_or_default();
    let mut header = vec!["setting", "row"];
    header.extend(categories.iter().map(|c| c.name()));
    w.write_record(&header)?;
    for s in &r.settings {
        let Some(f) = &s.feature_similarity else {
            continue;
        };
        let mut emit = |label: String, row: &CategoryPercentages| -> Result<()> {
            let mut rec = vec![s.setting.clone(), label];
            rec.extend(categories.iter().map(|c| format!("{:.4}", row[c])));
            w.write_record(&rec)?;
            Ok(())
        };
        emit("All Average".into(), &f.all_pairs_average)?;
        emit("All Median".into(), &f.all_pairs_median)?;
        for (c, row) in f.clusters.iter().enumerate() {
            if let Some(row) = row {
                emit(format!("Cluster {c}"), row)?;
            }
        }
        if let Some(avg) = &f.cluster_average {
            emit("Cluster Average".into(), avg)?;
        }
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Writes `report.json`, `report.csv`, `features_similarity.csv` and
/// `manifest.json` into `dir`, creating it if needed.
pub fn emit_report(r: &EvaluationReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = [REPORT_JSON, REPORT_CSV, FEATURES_CSV, MANIFEST_JSON]
        .iter()
        .map(|n| dir.join(n))
        .collect();
    write_json(&paths[0], r)?;
    fs::File::create(&paths[1])?.write_all(&report_csv(r)?)?;
    fs::File::create(&paths[2])?.write_all(&features_csv(r)?)?;
    write_json(&paths[3], &r.manifest)?;
    Ok(paths)
}

/// Reads a report from a `report.json` file or a directory containing one.
pub fn load_report(path: &Path) -> Result<EvaluationReport> {
    let file = if path.is_dir() {
        path.join(REPORT_JSON)
    } else {
        path.to_path_buf()
    };
    let bytes = fs::read(&file).map_err(|e| crate::Error::Dataset {
        path: file.clone(),
        msg: e.to_string(),
    })?;
    Ok(serde_json::from_slice(&bytes)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDelta {
    pub setting: String,
    pub cluster: Option<usize>,
    pub method: Method,
    pub metric: String,
    pub a: f64,
    pub b: f64,
}

impl RowDelta {
    pub fn delta(&self) -> f64 {
        self.b - self.a
    }
}

/// Differences between two reports' score rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportDiff {
    pub changed: Vec<RowDelta>,
    /// Rows present in only one report, as `setting/cluster/method`.
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
}

impl ReportDiff {
    pub fn is_empty(&self) -> bool {
        self.changed.is_empty() && self.only_in_a.is_empty() && self.only_in_b.is_empty()
    }
}

fn row_key(r: &ReportRow) -> (String, Option<usize>, Method) {
    (r.setting.clone(), r.cluster, r.method)
}

fn key_label(k: &(String, Option<usize>, Method)) -> String {
    let cluster = k.1.map_or_else(|| "Average".to_string(), |c| c.to_string());
    format!("{}/{}/{}", k.0, cluster, k.2)
}

/// Compares every metric of matching rows; differences larger than
/// `tolerance` are reported.
pub fn report_diff(a: &EvaluationReport, b: &EvaluationReport, tolerance: f64) -> ReportDiff {
    use std::collections::BTreeMap;
    let index = |r: &EvaluationReport| -> BTreeMap<_, ReportRow> {
        r.settings
            .iter()
            .flat_map(|s| s.rows.iter())
            .map(|row| (row_key(row), row.clone()))
            .collect()
    };
    let (ia, ib) = (index(a), index(b));
    let mut diff = ReportDiff::default();
    for (k, ra) in &ia {
        let Some(rb) = ib.get(k) else {
            diff.only_in_a.push(key_label(k));
            continue;
        };
        for m in Metric::ALL {
            let (x, y) = (ra.scores.get(m), rb.scores.get(m));
            if (x - y).abs() > tolerance || x.is_nan() != y.is_nan() {
                diff.changed.push(RowDelta {
                    setting: k.0.clone(),
                    cluster: k.1,
                    method: k.2,
                    metric: m.label().to_string(),
                    a: x,
                    b: y,
                });
            }
        }
    }
    diff.only_in_b = ib
        .keys()
        .filter(|k| !ia.contains_key(*k))
        .map(key_label)
        .collect();
    diff
}
