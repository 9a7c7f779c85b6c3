use std::path::PathBuf;

use crate::pipeline::Problem;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("no fixations")]
    NoFixations,

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate map (constant)")]
    DegenerateMap,

    #[error("map has zero total mass")]
    ZeroMass,

    #[error("missing ground truth for subject {subject}, image {image}")]
    MissingGroundTruth { subject: String, image: String },

    #[error("missing saliency map for subject {subject}, image {image}")]
    MissingMap { subject: String, image: String },

    #[error("missing universal map for method {method}, image {image}")]
    MissingUniversal { method: String, image: String },

    #[error("missing feature vector for subject {0}")]
    MissingFeatures(String),

    #[error("invalid k: {k} for {points} points")]
    InvalidK { k: usize, points: usize },

    #[error("graph has zero total weight")]
    ZeroWeightGraph,

    #[error("invalid clustering: {0}")]
    InvalidClustering(String),

    #[error("no assignment evidence")]
    NoAssignmentEvidence,

    #[error("non-binary feature value {value:?} for subject {subject}, feature {feature}")]
    NonBinaryFeature {
        subject: String,
        feature: String,
        value: String,
    },

    #[error("invalid feature vector: {0}")]
    InvalidFeatures(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{}: {msg}", path.display())]
    Dataset { path: PathBuf, msg: String },

    #[error("dataset validation failed with {} problem(s):\n{}", .0.len(), format_problems(.0))]
    Validation(Vec<Problem>),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_problems(problems: &[Problem]) -> String {
    problems
        .iter()
        .map(|p| format!("  {p}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    /// Whether the error describes bad input data or configuration rather
    /// than a failure while processing valid input.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation(_)
            | Error::Dataset { .. }
            | Error::NonBinaryFeature { .. }
            | Error::InvalidFeatures(_)
            | Error::MissingFeatures(_)
            | Error::MissingMap { .. }
            | Error::MissingUniversal { .. }
            | Error::MissingGroundTruth { .. }
            | Error::Config(_)
            | Error::Csv(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub(crate) fn dims(a: (usize, usize), b: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            left_w: a.0,
            left_h: a.1,
            right_w: b.0,
            right_h: b.1,
        }
    }

    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
