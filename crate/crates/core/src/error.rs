use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrilateral is not a rectangle: {0}")]
    NonRectangle(String),
    #[error("degenerate box: {0}")]
    DegenerateBox(String),
    #[error("invalid grasp: {0}")]
    InvalidGrasp(String),
    #[error("angle {0} is outside [-90, 90)")]
    OutOfRange(f64),
    #[error("background class has no angle")]
    BackgroundHasNoAngle,
    #[error("invalid angle class {0}")]
    InvalidClass(usize),
    #[error("not a probability distribution: {0}")]
    NotADistribution(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("missing image for sample {id}: {path}")]
    MissingImage { id: String, path: PathBuf },
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("object-wise split requires categories; unlabeled samples: {0:?}")]
    MissingCategories(Vec<String>),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bad depth range: d_min {d_min} must be below d_max {d_max}")]
    BadRange { d_min: f64, d_max: f64 },
    #[error("augmentation spec yields {available} combinations, {required} required")]
    InsufficientSpec { available: usize, required: usize },
    #[error("invalid augmentation spec: {0}")]
    InvalidSpec(String),
    #[error("no ground-truth grasps")]
    NoGroundTruth,
    #[error("degenerate anchor: {0}")]
    DegenerateAnchor(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid batch: {0}")]
    InvalidBatch(String),
    #[error("non-finite loss value: {0}")]
    NonFinite(f64),
    #[error("training diverged at step {step}: loss {loss} exceeds 10x initial {initial}")]
    Divergence { step: usize, loss: f64, initial: f64 },
    #[error("missing predictions for {n} sample(s): {0:?}", n = .0.len())]
    MissingPrediction(Vec<String>),
    #[error("mask has {0} object pixels, at least 10 required")]
    EmptyMask(usize),
    #[error("sample {0} has no mask")]
    MissingMask(String),
    #[error("sample {0} has no depth map")]
    MissingDepth(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable snake_case identifier for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonRectangle(_) => "non_rectangle",
            Error::DegenerateBox(_) => "degenerate_box",
            Error::InvalidGrasp(_) => "invalid_grasp",
            Error::OutOfRange(_) => "out_of_range",
            Error::BackgroundHasNoAngle => "background_has_no_angle",
            Error::InvalidClass(_) => "invalid_class",
            Error::NotADistribution(_) => "not_a_distribution",
            Error::Parse { .. } => "parse_error",
            Error::MissingImage { .. } => "missing_image",
            Error::EmptyDataset(_) => "empty_dataset",
            Error::MissingCategories(_) => "missing_categories",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::BadRange { .. } => "bad_range",
            Error::InsufficientSpec { .. } => "insufficient_spec",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::NoGroundTruth => "no_ground_truth",
            Error::DegenerateAnchor(_) => "degenerate_anchor",
            Error::EmptyBatch => "empty_batch",
            Error::InvalidBatch(_) => "invalid_batch",
            Error::NonFinite(_) => "non_finite",
            Error::Divergence { .. } => "divergence",
            Error::MissingPrediction(_) => "missing_prediction",
            Error::EmptyMask(_) => "empty_mask",
            Error::MissingMask(_) => "missing_mask",
            Error::MissingDepth(_) => "missing_depth",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Io { .. } => "io_error",
            Error::Image { .. } => "image_error",
            Error::Json(_) => "json_error",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn image(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Image {
            path: path.into(),
            source,
        }
    }
}
