//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use saliency_clusters::assignment::{holdout_experiments, HoldoutConfig, Scenario};
use saliency_clusters::clustering::graph::{feature_seed, image_seed, sample_images};
use saliency_clusters::clustering::{
    build_network, feature_similarity_report, kmeans, louvain, subject_similarity_clustering,
    Category, Clustering, ClusteringConfig, FeatureVector, SubjectGraph,
};
use saliency_clusters::map::resize_map;
use saliency_clusters::metrics::{auc_judd, cc, nss, sim};
use saliency_clusters::pipeline::{emit_report, run_pipeline, Method, RunConfig, Setting};
use saliency_clusters::synthetic::{generate, SyntheticSpec, UNIVERSAL_METHOD};
use saliency_clusters::{FixationMap, ImageId, SaliencyMap, SubjectId};

const GENDER_AVERAGE_TOL: f64 = 0.05;
const AUC_TOL: f64 = 1e-9;
const INVARIANCE_TOL: f64 = 1e-9;
const LOUVAIN_TOL: f64 = 1e-9;
const NETWORK_TOL: f64 = 1e-12;
const RECOVERY_MIN_SEEDS: usize = 18;
const RECOVERY_SEEDS: u64 = 20;
const BASELINE_SLACK: f64 = 0.02;
const HOLDOUT_MIN_CORRECT: f64 = 0.9;

type Outcome = Result<String, String>;

fn ids(prefix: &str, n: usize) -> Vec<SubjectId> {
    (0..n)
        .map(|i| SubjectId::from(format!("{prefix}{i:02}").as_str()))
        .collect()
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// 1 ------------------------------------------------------------------------

fn gender_similarity() -> Outcome {
    let subjects = ids("p", 30);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let features: BTreeMap<SubjectId, FeatureVector> = subjects
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut e: Vec<u8> = (0..43).map(|_| rng.gen_range(0..2)).collect();
            e[0] = u8::from(i < 14);
            (s.clone(), FeatureVector::full(s.clone(), e).unwrap())
        })
        .collect();
    let r = feature_similarity_report(&features, &Clustering::all_in_one(&subjects))
        .map_err(|e| e.to_string())?;
    let avg = r.all_pairs_average[&Category::Gender];
    let median = r.all_pairs_median[&Category::Gender];

    // oracle: same-gender pairs over all pairs
    let same = (14 * 13 / 2 + 16 * 15 / 2) as f64;
    let oracle = same / 435.0 * 100.0;
    check(
        (avg - oracle).abs() < 1e-9,
        format!("average {avg} != oracle {oracle}"),
    )?;
    // published "All individuals" row: 48.5 / 0.0
    check(
        (avg - 48.5).abs() <= GENDER_AVERAGE_TOL,
        format!("average {avg:.4} not within 0.05 of 48.5"),
    )?;
    check(median == 0.0, format!("median {median} != 0"))?;
    Ok(format!("average {avg:.4}%, median {median}%"))
}

// 2 ------------------------------------------------------------------------

/// Exhaustive ROC: every distinct map value is tried as a threshold, and
/// the curve keeps only the points produced by thresholds at fixated values.
fn auc_oracle(values: &[f64], fixated: &[usize]) -> f64 {
    let n = values.len() as f64;
    let nf = fixated.len() as f64;
    let mut thresholds: Vec<f64> = fixated.iter().map(|&i| values[i]).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut pts = vec![(0.0, 0.0)];
    for t in thresholds {
        let tp = fixated.iter().filter(|&&i| values[i] >= t).count() as f64;
        let above = values.iter().filter(|&&v| v >= t).count() as f64;
        let fp = if n - nf > 0.0 {
            (above - tp) / (n - nf)
        } else {
            0.0
        };
        pts.push((fp, tp / nf));
    }
    pts.push((1.0, 1.0));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

fn auc_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for k in 0..500 {
        // half the instances quantised to force ties
        let values: Vec<f64> = (0..64)
            .map(|_| {
                let v: f64 = rng.gen();
                if k % 2 == 0 {
                    (v * 8.0).floor() / 8.0
                } else {
                    v
                }
            })
            .collect();
        let n_fix = rng.gen_range(1..=10);
        let mut fixated: Vec<usize> = Vec::new();
        while fixated.len() < n_fix {
            let i = rng.gen_range(0..64);
            if !fixated.contains(&i) {
                fixated.push(i);
            }
        }
        fixated.sort();
        let pred = SaliencyMap::new(8, 8, values.clone()).unwrap();
        let fix = FixationMap::new(8, 8, fixated.iter().map(|&i| (i / 8, i % 8))).unwrap();
        let got = auc_judd(&pred, &fix).map_err(|e| e.to_string())?;
        worst = worst.max((got - auc_oracle(&values, &fixated)).abs());
    }
    check(worst <= AUC_TOL, format!("max deviation {worst:e}"))?;
    Ok(format!("500 instances, max deviation {worst:e}"))
}

// 3 ------------------------------------------------------------------------

fn metric_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = [0.0f64; 3];
    for _ in 0..200 {
        let a: Vec<f64> = (0..100).map(|_| rng.gen_range(0.01..0.99)).collect();
        let b: Vec<f64> = (0..100).map(|_| rng.gen_range(0.01..0.99)).collect();
        let (ma, mb) = (
            SaliencyMap::new(10, 10, a.clone()).unwrap(),
            SaliencyMap::new(10, 10, b).unwrap(),
        );
        let alpha = rng.gen_range(0.05..1.0);
        let beta = rng.gen_range(0.0..(1.0 - alpha * 0.99));
        let affine = ma.map_values(|v| alpha * v + beta).unwrap();
        let scaled = ma.map_values(|v| alpha * v).unwrap();
        let fix = FixationMap::new(
            10,
            10,
            (0..rng.gen_range(1..8)).map(|_| (rng.gen_range(0..10), rng.gen_range(0..10))),
        )
        .unwrap();

        let e = |x: saliency_clusters::Result<f64>| x.map_err(|e| e.to_string());
        worst[0] = worst[0].max((e(cc(&affine, &mb))? - e(cc(&ma, &mb))?).abs());
        worst[1] = worst[1].max((e(sim(&scaled, &mb))? - e(sim(&ma, &mb))?).abs());
        worst[2] = worst[2].max((e(nss(&affine, &fix))? - e(nss(&ma, &fix))?).abs());

        let base = e(auc_judd(&ma, &fix))?;
        let squared = e(auc_judd(&ma.map_values(|v| v * v).unwrap(), &fix))?;
        let root = e(auc_judd(&ma.map_values(f64::sqrt).unwrap(), &fix))?;
        check(
            base == squared && base == root,
            format!("AUC changed under monotone map: {base} {squared} {root}"),
        )?;
    }
    check(
        worst.iter().all(|&w| w <= INVARIANCE_TOL),
        format!("max deviations CC/SIM/NSS {worst:?}"),
    )?;
    Ok(format!(
        "200 pairs, max deviation CC {:e}, SIM {:e}, NSS {:e}; AUC exact",
        worst[0], worst[1], worst[2]
    ))
}

// 4 ------------------------------------------------------------------------

fn q_oracle(w: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = w.len();
    let k: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += w[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Every set partition of `n` nodes as restricted growth strings.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for l in 0..=max + 1 {
            cur[i] = l;
            rec(i + 1, max.max(l), cur, out);
        }
    }
    if n > 0 {
        rec(1, 0, &mut cur, &mut out);
    }
    out
}

fn graph_from(w: &[Vec<f64>], subjects: &[SubjectId]) -> SubjectGraph {
    let mut g = SubjectGraph::new(subjects.to_vec());
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            if w[i][j] > 0.0 {
                g.add_weight(i, j, w[i][j]);
            }
        }
    }
    g
}

fn labels_of(c: &Clustering, subjects: &[SubjectId]) -> Vec<usize> {
    subjects.iter().map(|s| c.cluster_of(s).unwrap()).collect()
}

fn louvain_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let subjects = ids("n", 8);
    let all8 = partitions(8);
    let mut clique_instances = 0;
    for inst in 0..10 {
        let mut w = vec![vec![0.0; 8]; 8];
        for base in [0, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    let x = rng.gen_range(1.0..3.0);
                    w[base + i][base + j] = x;
                    w[base + j][base + i] = x;
                }
            }
        }
        let (a, b) = (rng.gen_range(0..4), rng.gen_range(4..8));
        let bridge = rng.gen_range(0.1..1.0);
        w[a][b] = bridge;
        w[b][a] = bridge;
        let best = all8
            .iter()
            .map(|p| q_oracle(&w, p))
            .fold(f64::NEG_INFINITY, f64::max);
        let c = louvain(&graph_from(&w, &subjects), inst).map_err(|e| e.to_string())?;
        let labels = labels_of(&c, &subjects);
        let q = q_oracle(&w, &labels);
        check(
            q >= best - LOUVAIN_TOL,
            format!("clique instance {inst}: Q {q} < optimum {best}"),
        )?;
        check(
            labels == [0, 0, 0, 0, 1, 1, 1, 1],
            format!("clique instance {inst}: partition {labels:?}"),
        )?;
        clique_instances += 1;
    }

    let mut gaps = Vec::new();
    for inst in 0..50u64 {
        let n = rng.gen_range(2..=8);
        let subjects = ids("r", n);
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.5) {
                    let x = rng.gen_range(0.1..5.0);
                    w[i][j] = x;
                    w[j][i] = x;
                }
            }
        }
        if w.iter().flatten().all(|&x| x == 0.0) {
            w[0][1] = 1.0;
            w[1][0] = 1.0;
        }
        let c = louvain(&graph_from(&w, &subjects), inst).map_err(|e| e.to_string())?;
        let q = q_oracle(&w, &labels_of(&c, &subjects));
        let singletons: Vec<usize> = (0..n).collect();
        check(
            q >= q_oracle(&w, &singletons) - LOUVAIN_TOL,
            format!("random graph {inst}: below singletons"),
        )?;
        check(
            q >= q_oracle(&w, &vec![0; n]) - LOUVAIN_TOL,
            format!("random graph {inst}: below all-in-one"),
        )?;
        let best = partitions(n)
            .iter()
            .map(|p| q_oracle(&w, p))
            .fold(f64::NEG_INFINITY, f64::max);
        gaps.push(best - q);
    }
    let worst_gap = gaps.iter().cloned().fold(0.0, f64::max);
    Ok(format!(
        "{clique_instances} clique graphs optimal and exact; 50 random graphs above both baselines (largest gap to optimum {worst_gap:.4})"
    ))
}

// 5 ------------------------------------------------------------------------

fn network_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for inst in 0..20u64 {
        let n_sub = rng.gen_range(2..=10);
        let n_img = rng.gen_range(2..=20);
        let subjects = ids("s", n_sub);
        let images: Vec<ImageId> = (0..n_img)
            .map(|i| ImageId::from(format!("i{i:02}").as_str()))
            .collect();
        let mut psm = BTreeMap::new();
        for s in &subjects {
            for i in &images {
                let v: Vec<f64> = (0..36).map(|_| rng.gen()).collect();
                psm.insert((s.clone(), i.clone()), SaliencyMap::new(6, 6, v).unwrap());
            }
        }
        let features: BTreeMap<SubjectId, FeatureVector> = subjects
            .iter()
            .map(|s| {
                (
                    s.clone(),
                    FeatureVector::full(s.clone(), (0..43).map(|_| rng.gen_range(0..2)).collect())
                        .unwrap(),
                )
            })
            .collect();
        for w in [0.0, 0.5, 4.0] {
            let cfg = ClusteringConfig {
                k: rng.gen_range(1..=4),
                feature_weight: w,
                sample_size: rng.gen_range(1..=n_img),
                seed: inst,
                map_resolution: (8, 8),
                ..ClusteringConfig::default()
            };
            let net = build_network(&psm, &features, &subjects, &images, &cfg)
                .map_err(|e| e.to_string())?;

            // oracle: count co-memberships pair by pair
            let k = cfg.k.min(n_sub);
            let sampled = sample_images(&images, cfg.sample_size, cfg.seed).unwrap();
            let mut counts: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            for img in &sampled {
                let pts: Vec<Vec<f64>> = subjects
                    .iter()
                    .map(|s| {
                        resize_map(&psm[&(s.clone(), img.clone())], 8, 8)
                            .unwrap()
                            .into_values()
                    })
                    .collect();
                let labels = kmeans(&pts, k, image_seed(cfg.seed, img))
                    .unwrap()
                    .assignment;
                for a in 0..n_sub {
                    for b in a + 1..n_sub {
                        if labels[a] == labels[b] {
                            *counts.entry((a, b)).or_default() += 1.0;
                        }
                    }
                }
            }
            if w > 0.0 {
                let pts: Vec<Vec<f64>> = subjects
                    .iter()
                    .map(|s| {
                        features[s]
                            .entries()
                            .iter()
                            .map(|&v| f64::from(v))
                            .collect()
                    })
                    .collect();
                let labels = kmeans(&pts, k, feature_seed(cfg.seed)).unwrap().assignment;
                for a in 0..n_sub {
                    for b in a + 1..n_sub {
                        if labels[a] == labels[b] {
                            *counts.entry((a, b)).or_default() += w;
                        }
                    }
                }
            }
            for a in 0..n_sub {
                for b in a + 1..n_sub {
                    let expected = counts.get(&(a, b)).copied().unwrap_or(0.0);
                    let got = net.graph.weight_between(&subjects[a], &subjects[b]);
                    let ok = if w == 0.0 {
                        got == expected
                    } else {
                        (got - expected).abs() <= NETWORK_TOL
                    };
                    check(
                        ok,
                        format!(
                            "instance {inst}, W={w}: weight({a},{b}) = {got}, oracle {expected}"
                        ),
                    )?;
                }
            }
        }
    }
    Ok("20 datasets x W in {0, 0.5, 4}: all edge weights match".into())
}

// 6 ------------------------------------------------------------------------

fn planted_recovery() -> Outcome {
    let mut summary = Vec::new();
    for w in [0.0, 0.5] {
        let mut exact = 0;
        for seed in 0..RECOVERY_SEEDS {
            let data = generate(&SyntheticSpec {
                seed,
                ..SyntheticSpec::default()
            })
            .map_err(|e| e.to_string())?;
            let d = &data.dataset;
            let cfg = ClusteringConfig {
                k: 6,
                feature_weight: w,
                sample_size: d.images.len().min(100),
                seed,
                ..ClusteringConfig::default()
            };
            let r =
                subject_similarity_clustering(&d.psm, &d.features, &d.subjects, &d.images, &cfg)
                    .map_err(|e| e.to_string())?;
            if r.clustering == data.planted() {
                exact += 1;
            }
        }
        summary.push(format!("W={w}: {exact}/{RECOVERY_SEEDS}"));
        check(
            exact >= RECOVERY_MIN_SEEDS,
            format!("W={w}: only {exact}/{RECOVERY_SEEDS} exact recoveries"),
        )?;
    }
    Ok(summary.join(", "))
}

// 7 ------------------------------------------------------------------------

fn clustered_beats_universal() -> Outcome {
    let data = generate(&SyntheticSpec::default()).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new(
        vec![
            Setting::Preset(2),
            Setting::RandomAssign { clusters: 3 },
            Setting::AllInOne,
        ],
        UNIVERSAL_METHOD,
    );
    cfg.seed = 11;
    let r = run_pipeline(&cfg, &data.dataset).map_err(|e| e.to_string())?;
    let ssc = r.setting("Setting2").unwrap();
    check(
        ssc.clustering == data.planted(),
        "Setting2 did not recover the planted groups",
    )?;
    for (c, u) in ssc
        .cluster_rows(Method::Clustered)
        .zip(ssc.cluster_rows(Method::Universal))
    {
        check(
            c.scores.cc > u.scores.cc && c.scores.sim > u.scores.sim,
            format!(
                "cluster {:?}: clustered {:?} vs universal {:?}",
                c.cluster, c.scores, u.scores
            ),
        )?;
    }
    let avg = |label: &str| {
        r.setting(label)
            .unwrap()
            .average(Method::Clustered)
            .unwrap()
            .scores
            .cc
    };
    let (s, rnd, all) = (avg("Setting2"), avg("random_assign"), avg("all_in_one"));
    check(
        s >= rnd,
        format!("Setting2 CC {s:.4} < random_assign {rnd:.4}"),
    )?;
    check(
        rnd >= all - BASELINE_SLACK,
        format!("random_assign CC {rnd:.4} below all_in_one {all:.4} - 0.02"),
    )?;
    Ok(format!("per-cluster CC/SIM above universal; average CC {s:.4} >= {rnd:.4} (random) vs {all:.4} (all-in-one)"))
}

// 8 ------------------------------------------------------------------------

fn new_person_assignment() -> Outcome {
    let data = generate(&SyntheticSpec::default()).map_err(|e| e.to_string())?;
    let d = &data.dataset;
    let clustering = ClusteringConfig {
        feature_weight: 0.5,
        sample_size: d.images.len().min(100),
        seed: 21,
        ..ClusteringConfig::default()
    };
    let cfg = HoldoutConfig::new(clustering, UNIVERSAL_METHOD);
    let reports = holdout_experiments(
        d,
        &cfg,
        &[Scenario::FeaturesAndMaps, Scenario::FeaturesOnly],
    )
    .map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for r in &reports {
        let correct = r
            .subjects
            .iter()
            .filter(|s| {
                let own = data.groups[&s.subject];
                s.clusters[s.chosen]
                    .iter()
                    .filter(|m| data.groups[*m] == own)
                    .count()
                    * 2
                    > s.clusters[s.chosen].len()
            })
            .count();
        let frac = correct as f64 / r.subjects.len() as f64;
        let chosen = r.chosen.as_ref().ok_or("no chosen scores")?.mean.cc;
        let non = r.non_chosen.as_ref().ok_or("no non-chosen scores")?.mean.cc;
        check(
            frac >= HOLDOUT_MIN_CORRECT,
            format!("{}: {correct}/{} correct", r.scenario, r.subjects.len()),
        )?;
        check(
            chosen >= non,
            format!(
                "{}: chosen CC {chosen:.4} < non-chosen {non:.4}",
                r.scenario
            ),
        )?;
        lines.push(format!(
            "{} {correct}/{} (CC {chosen:.4} vs {non:.4})",
            r.scenario,
            r.subjects.len()
        ));
    }
    Ok(lines.join("; "))
}

// 9 ------------------------------------------------------------------------

fn determinism() -> Outcome {
    let data = generate(&SyntheticSpec {
        images: 20,
        ..SyntheticSpec::default()
    })
    .map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new(
        vec![Setting::Preset(2), Setting::RandomAssign { clusters: 3 }],
        UNIVERSAL_METHOD,
    );
    cfg.seed = 7;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let r = run_pipeline(&cfg, &data.dataset).map_err(|e| e.to_string())?;
        emit_report(&r, dir.path()).map_err(|e| e.to_string())?;
    }
    for name in ["report.json", "report.csv", "manifest.json"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        check(a == b, format!("{name} differs between runs"))?;
    }
    Ok("report.json, report.csv, manifest.json byte-identical".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        (
            "1 gender similarity",
            gender_similarity,
            Duration::from_secs(1),
        ),
        ("2 AUC-Judd oracle", auc_equivalence, Duration::from_secs(5)),
        (
            "3 metric invariance",
            metric_invariance,
            Duration::from_secs(60),
        ),
        (
            "4 Louvain optimality",
            louvain_optimality,
            Duration::from_secs(30),
        ),
        ("5 network oracle", network_oracle, Duration::from_secs(60)),
        (
            "6 planted recovery",
            planted_recovery,
            Duration::from_secs(120),
        ),
        (
            "7 clustered beats universal",
            clustered_beats_universal,
            Duration::from_secs(120),
        ),
        (
            "8 new-person assignment",
            new_person_assignment,
            Duration::from_secs(300),
        ),
        ("9 determinism", determinism, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > budget => {
                Err(format!("{msg}; took {elapsed:.2?}, budget {budget:?}"))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS  {name}: {msg} ({elapsed:.2?})"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg} ({elapsed:.2?})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
