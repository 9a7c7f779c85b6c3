//! On-disk dataset layout and loading.
//!
//! ```text
//! <root>/
//!   stimuli/<image>.png            optional, never read
//!   psm/<subject>/<image>.png      personal saliency maps
//!   fixations/<subject>/<image>.png  optional binary masks
//!   universal/<method>/<image>.png
//!   features.csv
//! ```
//!
//! Without a `fixations/` directory, fixations are derived from each PSM by
//! keeping pixels at or above its 99th percentile.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::features::{read_features_csv, write_features_csv};
use crate::clustering::FeatureVector;
use crate::map::resize_map;
use crate::{Error, FixationMap, ImageId, Result, SaliencyMap, SubjectId};

/// Percentile used to derive fixations from a PSM when none are supplied.
pub const DERIVED_FIXATION_PERCENTILE: f64 = 99.0;

/// One validation failure, tied to the path that caused it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Problem {
    pub path: PathBuf,
    pub msg: String,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.msg)
    }
}

/// How maps of differing sizes are brought to one working resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionPolicy {
    /// Use the size of the first readable PSM (by subject, then image).
    #[default]
    Native,
    Fixed {
        width: usize,
        height: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub subjects: Vec<SubjectId>,
    pub images: Vec<ImageId>,
    pub universal_methods: Vec<String>,
    pub resolution_policy: ResolutionPolicy,
    pub resolution: (usize, usize),
    pub derived_fixations: bool,
}

/// A fully decoded dataset. Every map is at `resolution`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub subjects: Vec<SubjectId>,
    pub images: Vec<ImageId>,
    pub resolution_policy: ResolutionPolicy,
    pub resolution: (usize, usize),
    pub psm: BTreeMap<(SubjectId, ImageId), SaliencyMap>,
    pub fixations: BTreeMap<(SubjectId, ImageId), FixationMap>,
    /// Fixations were derived from the PSMs rather than read from disk.
    pub derived_fixations: bool,
    pub universal: BTreeMap<String, BTreeMap<ImageId, SaliencyMap>>,
    pub features: BTreeMap<SubjectId, FeatureVector>,
}

fn psm_path(root: &Path, s: &SubjectId, i: &ImageId) -> PathBuf {
    root.join("psm").join(s.as_str()).join(format!("{i}.png"))
}

fn fixation_path(root: &Path, s: &SubjectId, i: &ImageId) -> PathBuf {
    root.join("fixations")
        .join(s.as_str())
        .join(format!("{i}.png"))
}

fn universal_path(root: &Path, method: &str, i: &ImageId) -> PathBuf {
    root.join("universal").join(method).join(format!("{i}.png"))
}

fn subdirs(dir: &Path) -> std::io::Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            out.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    out.sort();
    Ok(out)
}

fn png_stems(dir: &Path) -> std::io::Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"))
        {
            if let Some(stem) = path.file_stem() {
                out.insert(stem.to_string_lossy().into_owned());
            }
        }
    }
    Ok(out)
}

struct Problems(Vec<Problem>);

impl Problems {
    fn push(&mut self, path: &Path, msg: impl Into<String>) {
        self.0.push(Problem {
            path: path.to_path_buf(),
            msg: msg.into(),
        });
    }

    fn check<T>(&mut self, path: &Path, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(Error::Dataset { path, msg }) => {
                self.push(&path, msg);
                None
            }
            Err(e) => {
                self.push(path, e.to_string());
                None
            }
        }
    }
}

/// Shape of a dataset directory, before any map is decoded.
struct Layout {
    subjects: Vec<SubjectId>,
    images: Vec<ImageId>,
    methods: Vec<String>,
    has_fixations: bool,
}

fn scan(root: &Path, problems: &mut Problems) -> Layout {
    let mut layout = Layout {
        subjects: Vec::new(),
        images: Vec::new(),
        methods: Vec::new(),
        has_fixations: root.join("fixations").is_dir(),
    };
    let psm_dir = root.join("psm");
    let subject_names = match subdirs(&psm_dir) {
        Ok(v) if v.is_empty() => {
            problems.push(&psm_dir, "no subject directories");
            return layout;
        }
        Ok(v) => v,
        Err(e) => {
            problems.push(&psm_dir, format!("cannot read directory: {e}"));
            return layout;
        }
    };
    let mut images = BTreeSet::new();
    for s in &subject_names {
        match png_stems(&psm_dir.join(s)) {
            Ok(stems) => images.extend(stems),
            Err(e) => problems.push(&psm_dir.join(s), format!("cannot read directory: {e}")),
        }
    }
    let universal_dir = root.join("universal");
    match subdirs(&universal_dir) {
        Ok(v) if v.is_empty() => problems.push(&universal_dir, "no universal method directories"),
        Ok(v) => layout.methods = v,
        Err(e) => problems.push(&universal_dir, format!("cannot read directory: {e}")),
    }
    if images.is_empty() {
        problems.push(&psm_dir, "no PSM images");
    }
    layout.subjects = subject_names
        .iter()
        .map(|s| SubjectId::from(s.as_str()))
        .collect();
    layout.images = images
        .into_iter()
        .map(|s| ImageId::from(s.as_str()))
        .collect();
    layout
}

fn fit(m: SaliencyMap, (w, h): (usize, usize)) -> Result<SaliencyMap> {
    if m.dims() == (w, h) {
        Ok(m)
    } else {
        resize_map(&m, w, h)
    }
}

fn first_resolution(root: &Path, layout: &Layout) -> Option<(usize, usize)> {
    layout
        .subjects
        .iter()
        .flat_map(|s| layout.images.iter().map(move |i| psm_path(root, s, i)))
        .find_map(|p| image::image_dimensions(p).ok())
        .map(|(w, h)| (w as usize, h as usize))
}

/// Checks a dataset directory without keeping the decoded maps. Returns the
/// manifest or every problem found.
pub fn validate(root: &Path, policy: ResolutionPolicy) -> Result<DatasetManifest> {
    load_dataset_with(root, policy).map(|d| d.manifest())
}

pub fn load_dataset(root: &Path) -> Result<Dataset> {
    load_dataset_with(root, ResolutionPolicy::Native)
}

/// Loads and validates a dataset. All problems are collected before
/// failing, so one run reports every missing or malformed file.
pub fn load_dataset_with(root: &Path, policy: ResolutionPolicy) -> Result<Dataset> {
    let mut problems = Problems(Vec::new());
    if !root.is_dir() {
        problems.push(root, "dataset root is not a directory");
        return Err(Error::Validation(problems.0));
    }
    let layout = scan(root, &mut problems);

    let features_path = root.join("features.csv");
    let features = match fs::File::open(&features_path) {
        Ok(f) => problems.check(&features_path, read_features_csv(f)),
        Err(e) => {
            problems.push(&features_path, format!("cannot open: {e}"));
            None
        }
    };
    if let Some(features) = &features {
        for s in &layout.subjects {
            if !features.contains_key(s) {
                problems.push(&features_path, format!("no feature row for subject {s}"));
            }
        }
    }

    let resolution = match policy {
        ResolutionPolicy::Fixed { width, height } if width == 0 || height == 0 => {
            problems.push(root, "fixed resolution must be non-zero");
            None
        }
        ResolutionPolicy::Fixed { width, height } => Some((width, height)),
        ResolutionPolicy::Native => first_resolution(root, &layout),
    };

    let pairs: Vec<(SubjectId, ImageId)> = layout
        .subjects
        .iter()
        .flat_map(|s| layout.images.iter().map(move |i| (s.clone(), i.clone())))
        .collect();

    let load_map = |path: PathBuf| -> std::result::Result<SaliencyMap, Problem> {
        if !path.is_file() {
            return Err(Problem {
                path,
                msg: "missing file".into(),
            });
        }
        let res = resolution.ok_or_else(|| Problem {
            path: path.clone(),
            msg: "no working resolution".into(),
        })?;
        SaliencyMap::load_png(&path)
            .and_then(|m| fit(m, res))
            .map_err(|e| Problem {
                msg: problem_msg(&e),
                path,
            })
    };

    let psm_loaded = crate::par_map(&pairs, |(s, i)| load_map(psm_path(root, s, i)));
    let mut psm = BTreeMap::new();
    for (key, r) in pairs.iter().zip(psm_loaded) {
        match r {
            Ok(m) => {
                psm.insert(key.clone(), m);
            }
            Err(p) => problems.0.push(p),
        }
    }

    let mut fixations = BTreeMap::new();
    if layout.has_fixations {
        let loaded = crate::par_map(&pairs, |(s, i)| {
            let path = fixation_path(root, s, i);
            if !path.is_file() {
                return Err(Problem {
                    path,
                    msg: "missing file".into(),
                });
            }
            let fix = FixationMap::load_png(&path).map_err(|e| Problem {
                msg: problem_msg(&e),
                path: path.clone(),
            })?;
            if Some(fix.dims()) != resolution {
                return Err(Problem {
                    path,
                    msg: format!(
                        "fixation mask is {}x{}, expected the working resolution",
                        fix.width(),
                        fix.height()
                    ),
                });
            }
            Ok(fix)
        });
        for (key, r) in pairs.iter().zip(loaded) {
            match r {
                Ok(f) => {
                    fixations.insert(key.clone(), f);
                }
                Err(p) => problems.0.push(p),
            }
        }
    }

    let mut universal = BTreeMap::new();
    for method in &layout.methods {
        let loaded = crate::par_map(&layout.images, |i| {
            load_map(universal_path(root, method, i))
        });
        let mut maps = BTreeMap::new();
        for (i, r) in layout.images.iter().zip(loaded) {
            match r {
                Ok(m) => {
                    maps.insert(i.clone(), m);
                }
                Err(p) => problems.0.push(p),
            }
        }
        universal.insert(method.clone(), maps);
    }

    if !problems.0.is_empty() {
        problems.0.sort();
        return Err(Error::Validation(problems.0));
    }
    let features = features
        .expect("features present when no problems")
        .into_iter()
        .filter(|(s, _)| layout.subjects.contains(s))
        .collect();
    let mut dataset = Dataset {
        subjects: layout.subjects,
        images: layout.images,
        resolution_policy: policy,
        resolution: resolution.expect("resolution known when no problems"),
        psm,
        fixations,
        derived_fixations: !layout.has_fixations,
        universal,
        features,
    };
    if dataset.derived_fixations {
        dataset.derive_fixations()?;
    }
    Ok(dataset)
}

fn problem_msg(e: &Error) -> String {
    match e {
        Error::Dataset { msg, .. } => msg.clone(),
        other => other.to_string(),
    }
}

impl Dataset {
    /// Builds an in-memory dataset. Keys are checked for completeness and
    /// every map is brought to the resolution of the first PSM. With
    /// `fixations` set to `None` they are derived from the PSMs.
    pub fn from_parts(
        psm: BTreeMap<(SubjectId, ImageId), SaliencyMap>,
        fixations: Option<BTreeMap<(SubjectId, ImageId), FixationMap>>,
        universal: BTreeMap<String, BTreeMap<ImageId, SaliencyMap>>,
        features: BTreeMap<SubjectId, FeatureVector>,
    ) -> Result<Dataset> {
        let subjects: Vec<SubjectId> = psm
            .keys()
            .map(|(s, _)| s.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let images: Vec<ImageId> = psm
            .keys()
            .map(|(_, i)| i.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let resolution = psm
            .values()
            .next()
            .ok_or(Error::Empty("no saliency maps"))?
            .dims();
        for s in &subjects {
            for i in &images {
                if !psm.contains_key(&(s.clone(), i.clone())) {
                    return Err(Error::MissingMap {
                        subject: s.to_string(),
                        image: i.to_string(),
                    });
                }
            }
            if !features.contains_key(s) {
                return Err(Error::MissingFeatures(s.to_string()));
            }
        }
        if universal.is_empty() {
            return Err(Error::Empty("no universal methods"));
        }
        let mut fitted_universal = BTreeMap::new();
        for (method, maps) in universal {
            let mut fitted = BTreeMap::new();
            for i in &images {
                let m = maps.get(i).ok_or_else(|| Error::MissingUniversal {
                    method: method.clone(),
                    image: i.to_string(),
                })?;
                fitted.insert(i.clone(), fit(m.clone(), resolution)?);
            }
            fitted_universal.insert(method, fitted);
        }
        let psm = psm
            .into_iter()
            .map(|(k, m)| Ok((k, fit(m, resolution)?)))
            .collect::<Result<_>>()?;
        let derived = fixations.is_none();
        let mut dataset = Dataset {
            subjects,
            images,
            resolution_policy: ResolutionPolicy::Native,
            resolution,
            psm,
            fixations: fixations.unwrap_or_default(),
            derived_fixations: derived,
            universal: fitted_universal,
            features,
        };
        if derived {
            dataset.derive_fixations()?;
        } else {
            for key in dataset.psm.keys() {
                let fix = dataset
                    .fixations
                    .get(key)
                    .ok_or_else(|| Error::MissingGroundTruth {
                        subject: key.0.to_string(),
                        image: key.1.to_string(),
                    })?;
                if fix.dims() != resolution {
                    return Err(Error::dims(fix.dims(), resolution));
                }
            }
        }
        Ok(dataset)
    }

    fn derive_fixations(&mut self) -> Result<()> {
        let entries: Vec<(&(SubjectId, ImageId), &SaliencyMap)> = self.psm.iter().collect();
        let derived = crate::par_map(&entries, |(k, m)| {
            Ok((
                (*k).clone(),
                FixationMap::from_percentile(m, DERIVED_FIXATION_PERCENTILE)?,
            ))
        });
        self.fixations = derived.into_iter().collect::<Result<_>>()?;
        Ok(())
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            subjects: self.subjects.clone(),
            images: self.images.clone(),
            universal_methods: self.universal.keys().cloned().collect(),
            resolution_policy: self.resolution_policy,
            resolution: self.resolution,
            derived_fixations: self.derived_fixations,
        }
    }

    pub fn universal_for(&self, method: &str) -> Result<&BTreeMap<ImageId, SaliencyMap>> {
        self.universal.get(method).ok_or_else(|| {
            Error::Config(format!(
                "unknown universal method {method:?}; available: {}",
                self.universal
                    .keys()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })
    }

    /// Writes the dataset in the directory layout read by [`load_dataset`].
    /// Maps are stored as 8-bit PNGs. Fixations are written only when they
    /// were not derived.
    pub fn save(&self, root: &Path) -> Result<()> {
        for s in &self.subjects {
            fs::create_dir_all(root.join("psm").join(s.as_str()))?;
            if !self.derived_fixations {
                fs::create_dir_all(root.join("fixations").join(s.as_str()))?;
            }
        }
        for ((s, i), m) in &self.psm {
            m.save_png(&psm_path(root, s, i))?;
        }
        if !self.derived_fixations {
            for ((s, i), f) in &self.fixations {
                f.save_png(&fixation_path(root, s, i))?;
            }
        }
        for (method, maps) in &self.universal {
            fs::create_dir_all(root.join("universal").join(method))?;
            for (i, m) in maps {
                m.save_png(&universal_path(root, method, i))?;
            }
        }
        let f = fs::File::create(root.join("features.csv"))?;
        write_features_csv(std::io::BufWriter::new(f), self.features.values())
    }
}
