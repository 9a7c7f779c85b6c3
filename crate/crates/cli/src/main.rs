use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use saliency_clusters::assignment::{
    assign_held_out, holdout_experiments, HoldoutConfig, HoldoutReport, Scenario,
};
use saliency_clusters::clustering::{subject_similarity_clustering, Category, ClusteringConfig};
use saliency_clusters::metrics::{Metric, MetricScores};
use saliency_clusters::pipeline::{
    effective_config, emit_report, load_dataset_with, load_report, report_diff, run_pipeline,
    Dataset, ResolutionPolicy, RunConfig, Setting,
};
use saliency_clusters::synthetic::{generate, SyntheticSpec};
use saliency_clusters::translation::{SplitSpec, TranslatorKind};
use saliency_clusters::{Error, SubjectId};

const THREADS_ENV: &str = "SALIENCY_CLUSTERS_THREADS";

#[derive(Parser)]
#[command(
    name = "saliency-clusters",
    version,
    about = "Clustered saliency prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a dataset directory and list every problem found.
    Validate {
        root: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
    },
    /// Cluster the subjects of a dataset.
    Cluster {
        root: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        #[command(flatten)]
        clustering: ClusterArgs,
        /// Print the result as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Cluster, fit translators, evaluate and write the report files.
    Run {
        root: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        /// Setting0..Setting6, all_in_one, random_assign, custom, or all.
        /// Repeatable.
        #[arg(long = "setting", default_value = "Setting0")]
        settings: Vec<String>,
        /// Parameters for the `custom` setting.
        #[command(flatten)]
        custom: CustomArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Cluster count of the random_assign baseline.
        #[arg(long, default_value_t = 3)]
        random_clusters: usize,
        /// Fit and evaluate on every image (sanity check only).
        #[arg(long)]
        train_equals_test: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Place one subject as a new person into clusters of the others.
    Assign {
        root: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        #[arg(long)]
        subject: String,
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        #[command(flatten)]
        clustering: ClusterArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Feature weight of the closeness vote; defaults to the clustering W.
        #[arg(long)]
        vote_weight: Option<f64>,
    },
    /// Leave-one-out new-person experiment.
    Holdout {
        root: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        /// Scenario to run; both when omitted.
        #[arg(long, value_enum)]
        scenario: Option<ScenarioArg>,
        #[command(flatten)]
        clustering: ClusterArgs,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        vote_weight: Option<f64>,
        /// Write holdout.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the score rows of two reports.
    ReportDiff {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
    },
    /// Write a synthetic dataset with planted subject groups.
    Generate {
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        groups: usize,
        #[arg(long, default_value_t = 10)]
        subjects_per_group: usize,
        #[arg(long, default_value_t = 40)]
        images: usize,
        /// Map width and height in pixels.
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write fixation masks instead of leaving them to be derived.
        #[arg(long)]
        fixations: bool,
    },
}

#[derive(Args)]
struct LoadArgs {
    /// Working resolution as WIDTHxHEIGHT; defaults to the first PSM's size.
    #[arg(long, value_parser = parse_resolution)]
    resolution: Option<(usize, usize)>,
}

impl LoadArgs {
    fn load(&self, root: &Path) -> Result<Dataset, Error> {
        let policy = match self.resolution {
            Some((width, height)) => ResolutionPolicy::Fixed { width, height },
            None => ResolutionPolicy::Native,
        };
        load_dataset_with(root, policy)
    }
}

#[derive(Args)]
struct CustomArgs {
    /// Feature weight W.
    #[arg(long)]
    w: Option<f64>,
    /// K-Means cluster count.
    #[arg(long)]
    k: Option<usize>,
    /// Number of sampled images.
    #[arg(long)]
    sample: Option<usize>,
    /// Feature categories: all, none, or a list such as fashion,color.
    #[arg(long)]
    features: Option<String>,
}

impl CustomArgs {
    fn apply(&self, mut cfg: ClusteringConfig) -> Result<ClusteringConfig, Error> {
        if let Some(w) = self.w {
            cfg.feature_weight = w;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(s) = self.sample {
            cfg.sample_size = s;
        }
        if let Some(f) = &self.features {
            cfg.feature_categories = Category::parse_list(f)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn any(&self) -> bool {
        self.w.is_some() || self.k.is_some() || self.sample.is_some() || self.features.is_some()
    }
}

#[derive(Args)]
struct ClusterArgs {
    /// Preset Setting0..Setting6 to start from.
    #[arg(long)]
    setting: Option<String>,
    #[command(flatten)]
    custom: CustomArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ClusterArgs {
    fn config(&self) -> Result<ClusteringConfig, Error> {
        let base = match &self.setting {
            None => ClusteringConfig {
                seed: self.seed,
                ..ClusteringConfig::default()
            },
            Some(name) => match name.parse::<Setting>()? {
                s @ Setting::Preset(_) => s
                    .clustering_config(self.seed)?
                    .expect("preset has a config"),
                other => {
                    return Err(Error::Config(format!(
                        "{other} is a baseline; this command needs a similarity setting"
                    )))
                }
            },
        };
        self.custom.apply(base)
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum, default_value_t = TranslatorArg::MeanDiscrepancy)]
    translator: TranslatorArg,
    /// Universal saliency method (a directory under universal/).
    #[arg(long)]
    universal: Option<String>,
    #[arg(long, default_value_t = 0.2)]
    test_frac: f64,
}

impl EvalArgs {
    fn universal_method(&self, d: &Dataset) -> Result<String, Error> {
        match &self.universal {
            Some(m) => Ok(m.clone()),
            None if d.universal.len() == 1 => Ok(d.universal.keys().next().unwrap().clone()),
            None => Err(Error::Config(format!(
                "several universal methods available ({}); pick one with --universal",
                d.universal.keys().cloned().collect::<Vec<_>>().join(", ")
            ))),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum TranslatorArg {
    Identity,
    MeanDiscrepancy,
    Affine,
}

impl From<TranslatorArg> for TranslatorKind {
    fn from(t: TranslatorArg) -> Self {
        match t {
            TranslatorArg::Identity => TranslatorKind::Identity,
            TranslatorArg::MeanDiscrepancy => TranslatorKind::MeanDiscrepancy,
            TranslatorArg::Affine => TranslatorKind::Affine,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ScenarioArg {
    FeaturesAndMaps,
    FeaturesOnly,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::FeaturesAndMaps => Scenario::FeaturesAndMaps,
            ScenarioArg::FeaturesOnly => Scenario::FeaturesOnly,
        }
    }
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or("expected WIDTHxHEIGHT")?;
    let w: usize = w.parse().map_err(|_| "bad width")?;
    let h: usize = h.parse().map_err(|_| "bad height")?;
    if w == 0 || h == 0 {
        return Err("resolution must be non-zero".into());
    }
    Ok((w, h))
}

fn parse_settings(
    names: &[String],
    custom: Option<ClusteringConfig>,
    random_clusters: usize,
) -> Result<Vec<Setting>, Error> {
    let mut out = Vec::new();
    for name in names {
        match name.as_str() {
            "all" => {
                out.extend(Setting::presets());
                out.push(Setting::AllInOne);
                out.push(Setting::RandomAssign {
                    clusters: random_clusters,
                });
            }
            "custom" => out.push(Setting::Custom(custom.clone().ok_or_else(|| {
                Error::Config("custom setting needs --w/--k/--sample/--features".into())
            })?)),
            _ => out.push(match name.parse::<Setting>()? {
                Setting::RandomAssign { .. } => Setting::RandomAssign {
                    clusters: random_clusters,
                },
                s => s,
            }),
        }
    }
    Ok(out)
}

fn scores_line(s: &MetricScores) -> String {
    Metric::ALL
        .iter()
        .map(|&m| format!("{:>9.4}", s.get(m)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn metric_header() -> String {
    Metric::ALL
        .iter()
        .map(|m| format!("{:>9}", m.label()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_holdout(r: &HoldoutReport) {
    println!("scenario {}", r.scenario);
    if r.uses_test_maps {
        println!("  note: cluster choice used the subject's maps on the test images");
    }
    println!("  {:<22}{}", "", metric_header());
    for (label, ms) in [
        ("chosen mean", &r.chosen),
        ("non-chosen mean", &r.non_chosen),
        ("universal mean", &r.universal),
    ] {
        if let Some(ms) = ms {
            println!("  {label:<22}{}", scores_line(&ms.mean));
            println!("  {:<22}{}", "  std", scores_line(&ms.std));
        } else {
            println!("  {label:<22}(none)");
        }
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Validate { root, load } => {
            let d = load.load(&root)?;
            let m = d.manifest();
            println!(
                "ok: {} subjects, {} images, {} universal methods ({}), resolution {}x{}{}",
                m.subjects.len(),
                m.images.len(),
                m.universal_methods.len(),
                m.universal_methods.join(", "),
                m.resolution.0,
                m.resolution.1,
                if m.derived_fixations {
                    ", derived fixations"
                } else {
                    ""
                }
            );
        }
        Command::Cluster {
            root,
            load,
            clustering,
            json,
        } => {
            let d = load.load(&root)?;
            let cfg = effective_config(&clustering.config()?, d.images.len());
            let r =
                subject_similarity_clustering(&d.psm, &d.features, &d.subjects, &d.images, &cfg)?;
            if json {
                let v = serde_json::json!({
                    "config": cfg,
                    "clustering": r.clustering,
                    "modularity": r.modularity,
                    "sampled_images": r.network.sampled_images,
                });
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else {
                match r.modularity {
                    Some(q) => println!("{} clusters, modularity {q:.4}", r.clustering.n()),
                    None => println!("{} clusters", r.clustering.n()),
                }
                for (c, members) in r.clustering.clusters().iter().enumerate() {
                    let names: Vec<&str> = members.iter().map(|s| s.as_str()).collect();
                    println!("cluster {c}: {}", names.join(" "));
                }
            }
        }
        Command::Run {
            root,
            load,
            settings,
            custom,
            eval,
            random_clusters,
            train_equals_test,
            seed,
            out,
        } => {
            let d = load.load(&root)?;
            let custom_cfg = custom
                .any()
                .then(|| custom.apply(ClusteringConfig::default()))
                .transpose()?;
            let mut cfg = RunConfig::new(
                parse_settings(&settings, custom_cfg, random_clusters)?,
                eval.universal_method(&d)?,
            );
            cfg.translator = eval.translator.into();
            cfg.test_fraction = eval.test_frac;
            cfg.seed = seed;
            cfg.train_equals_test = train_equals_test;
            let report = run_pipeline(&cfg, &d)?;
            let written = emit_report(&report, &out)?;
            println!(
                "{:<16}{:>8} {:>10} {}",
                "setting",
                "cluster",
                "method",
                metric_header()
            );
            for s in &report.settings {
                for row in &s.rows {
                    let cluster = row
                        .cluster
                        .map_or_else(|| "Average".to_string(), |c| c.to_string());
                    println!(
                        "{:<16}{:>8} {:>10} {}",
                        row.setting,
                        cluster,
                        row.method.to_string(),
                        scores_line(&row.scores)
                    );
                }
            }
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Command::Assign {
            root,
            load,
            subject,
            scenario,
            clustering,
            eval,
            vote_weight,
        } => {
            let d = load.load(&root)?;
            let cfg = holdout_config(&d, &clustering, &eval, vote_weight)?;
            let subject = SubjectId::new(subject)?;
            let r = assign_held_out(&d, &cfg, &subject, scenario.into())?;
            println!("subject {} -> cluster {}", r.subject, r.chosen);
            for (c, members) in r.clusters.iter().enumerate() {
                let names: Vec<&str> = members.iter().map(|s| s.as_str()).collect();
                println!(
                    "  cluster {c}: closeness {:.4}  [{}]",
                    r.closeness.per_cluster[c],
                    names.join(" ")
                );
            }
        }
        Command::Holdout {
            root,
            load,
            scenario,
            clustering,
            eval,
            vote_weight,
            out,
        } => {
            let d = load.load(&root)?;
            let cfg = holdout_config(&d, &clustering, &eval, vote_weight)?;
            let scenarios: Vec<Scenario> = match scenario {
                Some(s) => vec![s.into()],
                None => vec![Scenario::FeaturesAndMaps, Scenario::FeaturesOnly],
            };
            let reports = holdout_experiments(&d, &cfg, &scenarios)?;
            for r in &reports {
                print_holdout(r);
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let path = dir.join("holdout.json");
                let mut bytes = serde_json::to_vec_pretty(&reports)?;
                bytes.push(b'\n');
                std::fs::write(&path, bytes)?;
                println!("wrote {}", path.display());
            }
        }
        Command::ReportDiff { a, b, tolerance } => {
            let diff = report_diff(&load_report(&a)?, &load_report(&b)?, tolerance);
            if diff.is_empty() {
                println!("reports match");
            }
            for c in &diff.changed {
                let cluster = c
                    .cluster
                    .map_or_else(|| "Average".to_string(), |c| c.to_string());
                println!(
                    "{}/{}/{} {}: {:.6} -> {:.6} ({:+.6})",
                    c.setting,
                    cluster,
                    c.method,
                    c.metric,
                    c.a,
                    c.b,
                    c.delta()
                );
            }
            for k in &diff.only_in_a {
                println!("only in first: {k}");
            }
            for k in &diff.only_in_b {
                println!("only in second: {k}");
            }
        }
        Command::Generate {
            out,
            groups,
            subjects_per_group,
            images,
            size,
            seed,
            fixations,
        } => {
            let spec = SyntheticSpec {
                groups,
                subjects_per_group,
                images,
                width: size,
                height: size,
                seed,
                ..SyntheticSpec::default()
            };
            let mut data = generate(&spec)?;
            data.dataset.derived_fixations = !fixations;
            data.dataset.save(&out)?;
            let groups_path = out.join("groups.json");
            std::fs::write(&groups_path, serde_json::to_vec_pretty(&data.groups)?)?;
            println!(
                "wrote {} subjects x {} images to {}",
                data.dataset.subjects.len(),
                data.dataset.images.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn holdout_config(
    d: &Dataset,
    clustering: &ClusterArgs,
    eval: &EvalArgs,
    vote_weight: Option<f64>,
) -> Result<HoldoutConfig, Error> {
    let mut cfg = HoldoutConfig::new(clustering.config()?, eval.universal_method(d)?);
    cfg.translator = eval.translator.into();
    cfg.split = SplitSpec {
        test_fraction: eval.test_frac,
        seed: clustering.seed,
    };
    cfg.vote_weight = vote_weight;
    Ok(cfg)
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| execute(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
