//! Saliency evaluation metrics (CC, SIM, AUC-Judd, NSS) and the per-cluster
//! averaging protocol: scores are averaged over a person's images first,
//! then over the persons of the cluster.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::map::resize_map;
use crate::{Error, FixationMap, ImageId, Result, SaliencyMap, SubjectId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub cc: f64,
    pub sim: f64,
    pub auc_judd: f64,
    pub nss: f64,
}

impl MetricScores {
    pub const ZERO: MetricScores = MetricScores {
        cc: 0.0,
        sim: 0.0,
        auc_judd: 0.0,
        nss: 0.0,
    };

    /// Arithmetic mean, summed in the given order. `None` for an empty slice.
    pub fn mean(scores: &[MetricScores]) -> Option<MetricScores> {
        if scores.is_empty() {
            return None;
        }
        let n = scores.len() as f64;
        let sum = scores
            .iter()
            .fold(MetricScores::ZERO, |acc, s| MetricScores {
                cc: acc.cc + s.cc,
                sim: acc.sim + s.sim,
                auc_judd: acc.auc_judd + s.auc_judd,
                nss: acc.nss + s.nss,
            });
        Some(MetricScores {
            cc: sum.cc / n,
            sim: sum.sim / n,
            auc_judd: sum.auc_judd / n,
            nss: sum.nss / n,
        })
    }

    /// Population standard deviation per metric.
    pub fn std_dev(scores: &[MetricScores]) -> Option<MetricScores> {
        let m = Self::mean(scores)?;
        let sq: Vec<MetricScores> = scores
            .iter()
            .map(|s| MetricScores {
                cc: (s.cc - m.cc).powi(2),
                sim: (s.sim - m.sim).powi(2),
                auc_judd: (s.auc_judd - m.auc_judd).powi(2),
                nss: (s.nss - m.nss).powi(2),
            })
            .collect();
        let v = Self::mean(&sq)?;
        Some(MetricScores {
            cc: v.cc.sqrt(),
            sim: v.sim.sqrt(),
            auc_judd: v.auc_judd.sqrt(),
            nss: v.nss.sqrt(),
        })
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Cc => self.cc,
            Metric::Sim => self.sim,
            Metric::AucJudd => self.auc_judd,
            Metric::Nss => self.nss,
        }
    }
}

/// Column order used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Cc,
    Sim,
    AucJudd,
    Nss,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Cc, Metric::Sim, Metric::AucJudd, Metric::Nss];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Cc => "CC",
            Metric::Sim => "SIM",
            Metric::AucJudd => "AUC-Judd",
            Metric::Nss => "NSS",
        }
    }
}

fn mean_and_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Pearson correlation of the two maps' pixel values.
pub fn cc(pred: &SaliencyMap, gt: &SaliencyMap) -> Result<f64> {
    pred.check_same_dims(gt)?;
    if pred.is_constant() || gt.is_constant() {
        return Err(Error::DegenerateMap);
    }
    let (mp, vp) = mean_and_var(pred.values());
    let (mg, vg) = mean_and_var(gt.values());
    let n = pred.len() as f64;
    let cov = pred
        .values()
        .iter()
        .zip(gt.values())
        .map(|(p, g)| (p - mp) * (g - mg))
        .sum::<f64>()
        / n;
    Ok((cov / (vp.sqrt() * vg.sqrt())).clamp(-1.0, 1.0))
}

/// Histogram intersection of the two sum-normalized maps.
pub fn sim(pred: &SaliencyMap, gt: &SaliencyMap) -> Result<f64> {
    pred.check_same_dims(gt)?;
    let sp: f64 = pred.values().iter().sum();
    let sg: f64 = gt.values().iter().sum();
    if sp <= 0.0 || sg <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let s: f64 = pred
        .values()
        .iter()
        .zip(gt.values())
        .map(|(p, g)| (p / sp).min(g / sg))
        .sum();
    Ok(s.clamp(0.0, 1.0))
}

/// Mean of the z-scored prediction (population std) at fixated pixels.
pub fn nss(pred: &SaliencyMap, fixations: &FixationMap) -> Result<f64> {
    if pred.dims() != fixations.dims() {
        return Err(Error::dims(pred.dims(), fixations.dims()));
    }
    if fixations.is_empty() {
        return Err(Error::NoFixations);
    }
    if pred.is_constant() {
        return Err(Error::DegenerateMap);
    }
    let (mean, var) = mean_and_var(pred.values());
    let std = var.sqrt();
    let idx = fixations.indices();
    let total: f64 = idx.iter().map(|&i| (pred.values()[i] - mean) / std).sum();
    Ok(total / idx.len() as f64)
}

/// AUC-Judd. Thresholds are the distinct prediction values at fixated
/// pixels; a pixel counts as positive at threshold `t` when its value is
/// `>= t`. TP rate is over fixated pixels, FP rate over the remaining
/// pixels. The ROC runs from (0,0) to (1,1) and is integrated with the
/// trapezoid rule.
pub fn auc_judd(pred: &SaliencyMap, fixations: &FixationMap) -> Result<f64> {
    if pred.dims() != fixations.dims() {
        return Err(Error::dims(pred.dims(), fixations.dims()));
    }
    if fixations.is_empty() {
        return Err(Error::NoFixations);
    }
    let n_fix = fixations.len();
    let n_pix = pred.len();
    let n_neg = n_pix - n_fix;

    let mut fix_vals: Vec<f64> = fixations
        .indices()
        .iter()
        .map(|&i| pred.values()[i])
        .collect();
    fix_vals.sort_by(|a, b| b.total_cmp(a));
    let mut all: Vec<f64> = pred.values().to_vec();
    all.sort_by(|a, b| b.total_cmp(a));

    let mut tp = vec![0.0];
    let mut fp = vec![0.0];
    let (mut i_fix, mut i_all) = (0usize, 0usize);
    while i_fix < fix_vals.len() {
        let t = fix_vals[i_fix];
        while i_fix < fix_vals.len() && fix_vals[i_fix] >= t {
            i_fix += 1;
        }
        while i_all < all.len() && all[i_all] >= t {
            i_all += 1;
        }
        tp.push(i_fix as f64 / n_fix as f64);
        fp.push(if n_neg == 0 {
            0.0
        } else {
            (i_all - i_fix) as f64 / n_neg as f64
        });
    }
    tp.push(1.0);
    fp.push(1.0);

    let area: f64 = (1..tp.len())
        .map(|k| (fp[k] - fp[k - 1]) * (tp[k] + tp[k - 1]) / 2.0)
        .sum();
    Ok(area.clamp(0.0, 1.0))
}

/// All four metrics for one prediction against one person's ground truth.
/// The prediction is resampled to the ground-truth resolution when needed.
pub fn score_pair(
    pred: &SaliencyMap,
    gt_map: &SaliencyMap,
    gt_fix: &FixationMap,
) -> Result<MetricScores> {
    let resized;
    let pred = if pred.dims() != gt_map.dims() {
        resized = resize_map(pred, gt_map.width(), gt_map.height())?;
        &resized
    } else {
        pred
    };
    Ok(MetricScores {
        cc: cc(pred, gt_map)?,
        sim: sim(pred, gt_map)?,
        auc_judd: auc_judd(pred, gt_fix)?,
        nss: nss(pred, gt_fix)?,
    })
}

/// Per-(subject, image) ground truth.
#[derive(Debug, Clone, Copy)]
pub struct GroundTruth<'a> {
    pub maps: &'a BTreeMap<(SubjectId, ImageId), SaliencyMap>,
    pub fixations: &'a BTreeMap<(SubjectId, ImageId), FixationMap>,
}

impl<'a> GroundTruth<'a> {
    fn get(&self, s: &SubjectId, i: &ImageId) -> Result<(&'a SaliencyMap, &'a FixationMap)> {
        let key = (s.clone(), i.clone());
        let missing = || Error::MissingGroundTruth {
            subject: s.to_string(),
            image: i.to_string(),
        };
        Ok((
            self.maps.get(&key).ok_or_else(missing)?,
            self.fixations.get(&key).ok_or_else(missing)?,
        ))
    }
}

/// One person's scores averaged over images.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonEvaluation {
    /// `None` when every image was skipped as degenerate.
    pub scores: Option<MetricScores>,
    pub skipped: usize,
}

fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::DegenerateMap | Error::ZeroMass)
}

/// Scores one person over `images`. Pairs where a metric is undefined
/// (constant or empty maps) are skipped and counted.
pub fn evaluate_person(
    preds: &BTreeMap<ImageId, SaliencyMap>,
    person: &SubjectId,
    gt: GroundTruth<'_>,
    images: &[ImageId],
) -> Result<PersonEvaluation> {
    let mut images = images.to_vec();
    images.sort();
    images.dedup();
    let mut per_image = Vec::with_capacity(images.len());
    let mut skipped = 0;
    for img in &images {
        let pred = preds.get(img).ok_or_else(|| Error::MissingGroundTruth {
            subject: "<prediction>".into(),
            image: img.to_string(),
        })?;
        let (gm, gf) = gt.get(person, img)?;
        match score_pair(pred, gm, gf) {
            Ok(s) => per_image.push(s),
            Err(e) if is_degenerate(&e) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(PersonEvaluation {
        scores: MetricScores::mean(&per_image),
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEvaluation {
    pub cluster_id: usize,
    pub method_label: String,
    pub scores: MetricScores,
    pub person_count: usize,
    /// (person, image) pairs dropped because a metric was undefined.
    pub skipped: usize,
}

/// Averages each metric over images per person, then over persons.
pub fn evaluate_cluster(
    cluster_id: usize,
    method_label: &str,
    preds: &BTreeMap<ImageId, SaliencyMap>,
    persons: &[SubjectId],
    gt: GroundTruth<'_>,
    images: &[ImageId],
) -> Result<ClusterEvaluation> {
    let mut persons = persons.to_vec();
    persons.sort();
    persons.dedup();
    for p in &persons {
        for i in images {
            gt.get(p, i)?;
        }
    }
    let per_person = crate::par_map(&persons, |p| evaluate_person(preds, p, gt, images));
    let mut scores = Vec::with_capacity(persons.len());
    let mut skipped = 0;
    for r in per_person {
        let r = r?;
        skipped += r.skipped;
        scores.extend(r.scores);
    }
    let mean = MetricScores::mean(&scores).ok_or(Error::Empty(
        "every (person, image) pair in the cluster was degenerate",
    ))?;
    Ok(ClusterEvaluation {
        cluster_id,
        method_label: method_label.to_string(),
        scores: mean,
        person_count: scores.len(),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn map(w: usize, h: usize, v: &[f64]) -> SaliencyMap {
        SaliencyMap::new(w, h, v.to_vec()).unwrap()
    }

    #[test]
    fn cc_examples() {
        let m = map(2, 2, &[0.1, 0.5, 0.2, 0.9]);
        assert!((cc(&m, &m).unwrap() - 1.0).abs() < 1e-12);
        let inv = m.map_values(|v| 1.0 - v).unwrap();
        assert!((cc(&m, &inv).unwrap() + 1.0).abs() < 1e-12);

        let p = [0.0, 0.5, 0.5, 1.0];
        let g = [0.5, 0.0, 1.0, 0.5];
        // direct Pearson formula: sum(dx dy) / sqrt(sum dx^2 sum dy^2)
        let (mp, mg) = (0.5, 0.5);
        let num: f64 = p.iter().zip(&g).map(|(a, b)| (a - mp) * (b - mg)).sum();
        let dx: f64 = p.iter().map(|a| (a - mp).powi(2)).sum();
        let dy: f64 = g.iter().map(|b| (b - mg).powi(2)).sum();
        let oracle = num / (dx * dy).sqrt();
        assert!((cc(&map(2, 2, &p), &map(2, 2, &g)).unwrap() - oracle).abs() < 1e-12);
        assert!(oracle.abs() < 1e-12);
    }

    #[test]
    fn cc_constant_is_error() {
        let c = SaliencyMap::constant(2, 2, 0.3).unwrap();
        let m = map(2, 2, &[0.1, 0.5, 0.2, 0.9]);
        assert!(matches!(cc(&c, &m), Err(Error::DegenerateMap)));
        assert!(matches!(cc(&m, &c), Err(Error::DegenerateMap)));
    }

    #[test]
    fn sim_examples() {
        let m = map(2, 2, &[0.1, 0.5, 0.2, 0.9]);
        assert!((sim(&m, &m).unwrap() - 1.0).abs() < 1e-12);
        let a = map(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = map(2, 2, &[0.0, 0.0, 0.3, 0.0]);
        assert_eq!(sim(&a, &b).unwrap(), 0.0);
        let p = map(2, 2, &[0.5, 0.5, 0.0, 0.0]);
        let u = SaliencyMap::constant(2, 2, 0.25).unwrap();
        assert!((sim(&p, &u).unwrap() - 0.5).abs() < 1e-12);
        let z = SaliencyMap::constant(2, 2, 0.0).unwrap();
        assert!(matches!(sim(&z, &u), Err(Error::ZeroMass)));
    }

    #[test]
    fn nss_examples() {
        let p = map(2, 2, &[0.1, 0.2, 0.3, 0.4]);
        let f = FixationMap::new(2, 2, [(1, 1)]).unwrap();
        let expected = (4.0 - 2.5) / 1.25f64.sqrt();
        assert!((nss(&p, &f).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 1.3416).abs() < 1e-4);

        let all = FixationMap::new(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        assert!(nss(&p, &all).unwrap().abs() < 1e-12);

        let shifted = p.map_values(|v| 0.5 * v + 0.2).unwrap();
        assert!((nss(&shifted, &f).unwrap() - nss(&p, &f).unwrap()).abs() < 1e-9);

        let empty = FixationMap::new(2, 2, []).unwrap();
        assert!(matches!(nss(&p, &empty), Err(Error::NoFixations)));
        let c = SaliencyMap::constant(2, 2, 0.5).unwrap();
        assert!(matches!(nss(&c, &f), Err(Error::DegenerateMap)));
    }

    #[test]
    fn auc_examples() {
        let p = map(3, 1, &[0.9, 0.8, 0.1]);
        let f = FixationMap::new(3, 1, [(0, 0), (0, 1)]).unwrap();
        assert_eq!(auc_judd(&p, &f).unwrap(), 1.0);

        let c = SaliencyMap::constant(4, 4, 0.3).unwrap();
        let f = FixationMap::new(4, 4, [(0, 0), (2, 3)]).unwrap();
        assert!((auc_judd(&c, &f).unwrap() - 0.5).abs() < 1e-12);

        // fixated {0.9, 0.3}, others {0.5, 0.1}: points (0,0) (0,.5) (.5,1) (1,1)
        let p = map(4, 1, &[0.9, 0.5, 0.3, 0.1]);
        let f = FixationMap::new(4, 1, [(0, 0), (0, 2)]).unwrap();
        assert!((auc_judd(&p, &f).unwrap() - 0.875).abs() < 1e-12);

        let empty = FixationMap::new(4, 1, []).unwrap();
        assert!(matches!(auc_judd(&p, &empty), Err(Error::NoFixations)));
    }

    #[test]
    fn auc_every_pixel_fixated() {
        let p = map(2, 1, &[0.2, 0.7]);
        let f = FixationMap::new(2, 1, [(0, 0), (0, 1)]).unwrap();
        assert!((0.0..=1.0).contains(&auc_judd(&p, &f).unwrap()));
    }

    /// Recounts every threshold by a full scan, no sorting or sweeping.
    fn auc_bruteforce(pred: &[f64], fixated: &[usize]) -> f64 {
        let n_fix = fixated.len() as f64;
        let n_neg = (pred.len() - fixated.len()) as f64;
        let mut thresholds: Vec<f64> = fixated.iter().map(|&i| pred[i]).collect();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let mut pts = vec![(0.0, 0.0)];
        for t in thresholds {
            let tp = fixated.iter().filter(|&&i| pred[i] >= t).count() as f64;
            let above = pred.iter().filter(|&&v| v >= t).count() as f64;
            pts.push(((above - tp) / n_neg, tp / n_fix));
        }
        pts.push((1.0, 1.0));
        pts.windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
            .sum()
    }

    #[test]
    fn auc_matches_bruteforce_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            // coarse quantization produces ties
            let vals: Vec<f64> = (0..64)
                .map(|_| rng.gen_range(0..20) as f64 / 19.0)
                .collect();
            let n = rng.gen_range(1..=10);
            let fix: std::collections::BTreeSet<usize> =
                (0..n).map(|_| rng.gen_range(0..64)).collect();
            let f = FixationMap::new(8, 8, fix.iter().map(|&i| (i / 8, i % 8))).unwrap();
            let got = auc_judd(&map(8, 8, &vals), &f).unwrap();
            let want = auc_bruteforce(&vals, &fix.iter().copied().collect::<Vec<_>>());
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    fn gt_fixture(
        entries: &[(&str, &str, SaliencyMap, FixationMap)],
    ) -> (
        BTreeMap<(SubjectId, ImageId), SaliencyMap>,
        BTreeMap<(SubjectId, ImageId), FixationMap>,
    ) {
        let mut maps = BTreeMap::new();
        let mut fix = BTreeMap::new();
        for (s, i, m, f) in entries {
            maps.insert((SubjectId::from(*s), ImageId::from(*i)), m.clone());
            fix.insert((SubjectId::from(*s), ImageId::from(*i)), f.clone());
        }
        (maps, fix)
    }

    #[test]
    fn evaluate_self_prediction() {
        let m1 = map(2, 2, &[0.1, 0.5, 0.2, 0.9]);
        let m2 = map(2, 2, &[0.7, 0.1, 0.3, 0.2]);
        let f = FixationMap::new(2, 2, [(0, 0)]).unwrap();
        let (maps, fix) = gt_fixture(&[
            ("a", "x", m1.clone(), f.clone()),
            ("a", "y", m2.clone(), f.clone()),
        ]);
        let preds: BTreeMap<_, _> = [(ImageId::from("x"), m1), (ImageId::from("y"), m2)].into();
        let images = [ImageId::from("x"), ImageId::from("y")];
        let gt = GroundTruth {
            maps: &maps,
            fixations: &fix,
        };
        let e =
            evaluate_cluster(0, "Clustered", &preds, &[SubjectId::from("a")], gt, &images).unwrap();
        assert!((e.scores.cc - 1.0).abs() < 1e-12);
        assert!((e.scores.sim - 1.0).abs() < 1e-12);
        assert_eq!(e.person_count, 1);
    }

    #[test]
    fn evaluate_averages_per_person_then_over_persons() {
        let p1 = map(2, 2, &[0.1, 0.5, 0.2, 0.9]);
        let p2 = map(2, 2, &[0.8, 0.3, 0.3, 0.1]);
        let g = [
            map(2, 2, &[0.2, 0.4, 0.1, 1.0]),
            map(2, 2, &[0.9, 0.1, 0.5, 0.3]),
            map(2, 2, &[0.0, 0.6, 0.6, 0.2]),
            map(2, 2, &[0.4, 0.4, 0.0, 0.7]),
        ];
        let fa = FixationMap::new(2, 2, [(1, 1)]).unwrap();
        let fb = FixationMap::new(2, 2, [(0, 0), (1, 0)]).unwrap();
        let (maps, fix) = gt_fixture(&[
            ("a", "x", g[0].clone(), fa.clone()),
            ("a", "y", g[1].clone(), fb.clone()),
            ("b", "x", g[2].clone(), fb.clone()),
            ("b", "y", g[3].clone(), fa.clone()),
        ]);
        let preds: BTreeMap<_, _> = [
            (ImageId::from("x"), p1.clone()),
            (ImageId::from("y"), p2.clone()),
        ]
        .into();
        let gt = GroundTruth {
            maps: &maps,
            fixations: &fix,
        };
        let images = [ImageId::from("y"), ImageId::from("x")];
        let persons = [SubjectId::from("b"), SubjectId::from("a")];
        let e = evaluate_cluster(0, "Clustered", &preds, &persons, gt, &images).unwrap();

        let one = |p: &SaliencyMap, m: &SaliencyMap, f: &FixationMap| {
            [
                cc(p, m).unwrap(),
                sim(p, m).unwrap(),
                auc_judd(p, f).unwrap(),
                nss(p, f).unwrap(),
            ]
        };
        let s = [
            one(&p1, &g[0], &fa),
            one(&p2, &g[1], &fb),
            one(&p1, &g[2], &fb),
            one(&p2, &g[3], &fa),
        ];
        // equal image counts per person: the two-stage mean is the mean of four
        for (k, got) in [e.scores.cc, e.scores.sim, e.scores.auc_judd, e.scores.nss]
            .iter()
            .enumerate()
        {
            let want = (s[0][k] + s[1][k] + s[2][k] + s[3][k]) / 4.0;
            assert!((got - want).abs() < 1e-9);
        }

        // identical ground truth for two persons equals the single-person result
        let (maps2, fix2) = gt_fixture(&[
            ("a", "x", g[0].clone(), fa.clone()),
            ("a", "y", g[1].clone(), fb.clone()),
            ("b", "x", g[0].clone(), fa.clone()),
            ("b", "y", g[1].clone(), fb.clone()),
        ]);
        let gt2 = GroundTruth {
            maps: &maps2,
            fixations: &fix2,
        };
        let both = evaluate_cluster(0, "C", &preds, &persons, gt2, &images).unwrap();
        let single =
            evaluate_cluster(0, "C", &preds, &[SubjectId::from("a")], gt2, &images).unwrap();
        assert!((both.scores.cc - single.scores.cc).abs() < 1e-12);
        assert!((both.scores.nss - single.scores.nss).abs() < 1e-12);
    }

    #[test]
    fn evaluate_reports_missing_pair() {
        let m = map(2, 2, &[0.1, 0.5, 0.2, 0.9]);
        let f = FixationMap::new(2, 2, [(0, 0)]).unwrap();
        let (maps, fix) = gt_fixture(&[("a", "x", m.clone(), f)]);
        let preds: BTreeMap<_, _> = [(ImageId::from("x"), m)].into();
        let gt = GroundTruth {
            maps: &maps,
            fixations: &fix,
        };
        let err = evaluate_cluster(
            0,
            "C",
            &preds,
            &[SubjectId::from("b")],
            gt,
            &[ImageId::from("x")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("subject b, image x"));
    }

    #[test]
    fn evaluate_skips_degenerate_pairs() {
        let m = map(2, 2, &[0.1, 0.5, 0.2, 0.9]);
        let c = SaliencyMap::constant(2, 2, 0.4).unwrap();
        let f = FixationMap::new(2, 2, [(0, 0)]).unwrap();
        let (maps, fix) = gt_fixture(&[("a", "x", m.clone(), f.clone()), ("a", "y", m.clone(), f)]);
        let preds: BTreeMap<_, _> = [(ImageId::from("x"), m), (ImageId::from("y"), c)].into();
        let gt = GroundTruth {
            maps: &maps,
            fixations: &fix,
        };
        let images = [ImageId::from("x"), ImageId::from("y")];
        let e = evaluate_cluster(0, "C", &preds, &[SubjectId::from("a")], gt, &images).unwrap();
        assert_eq!(e.skipped, 1);
        assert!((e.scores.cc - 1.0).abs() < 1e-12);
    }

    fn arb_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(0.01f64..0.99, 16),
            prop::collection::vec(0.01f64..0.99, 16),
        )
    }

    proptest! {
        #[test]
        fn cc_symmetric_and_affine_invariant((a, b) in arb_pair(), alpha in 0.1f64..1.0, beta in 0.0f64..0.009) {
            let (ma, mb) = (map(4, 4, &a), map(4, 4, &b));
            let ab = cc(&ma, &mb).unwrap();
            prop_assert!((ab - cc(&mb, &ma).unwrap()).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&ab));
            let t = ma.map_values(|v| alpha * v + beta).unwrap();
            prop_assert!((cc(&t, &mb).unwrap() - ab).abs() < 1e-9);
        }

        #[test]
        fn sim_symmetric_and_scale_invariant((a, b) in arb_pair(), c in 0.05f64..1.0) {
            let (ma, mb) = (map(4, 4, &a), map(4, 4, &b));
            let s = sim(&ma, &mb).unwrap();
            prop_assert!((s - sim(&mb, &ma).unwrap()).abs() < 1e-12);
            let scaled = ma.map_values(|v| c * v).unwrap();
            prop_assert!((sim(&scaled, &mb).unwrap() - s).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn auc_invariant_under_monotone_transforms(a in prop::collection::vec(0.01f64..0.99, 16), fix in prop::collection::btree_set(0usize..16, 1..6)) {
            let m = map(4, 4, &a);
            let f = FixationMap::new(4, 4, fix.iter().map(|&i| (i / 4, i % 4))).unwrap();
            let base = auc_judd(&m, &f).unwrap();
            prop_assert!((0.0..=1.0).contains(&base));
            prop_assert_eq!(auc_judd(&m.map_values(|v| v * v).unwrap(), &f).unwrap(), base);
            prop_assert_eq!(auc_judd(&m.map_values(f64::sqrt).unwrap(), &f).unwrap(), base);
        }
    }
}
