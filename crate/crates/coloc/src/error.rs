use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the co-localization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("unsupported raster format for {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("raster has a zero dimension")]
    ZeroDimension,

    #[error("raster is {width}x{height}; at least 2x2 is required")]
    MinimumSizeViolated { width: u32, height: u32 },

    #[error("intensity {value} at index {index} is outside [0, 1]")]
    IntensityOutOfRange { index: usize, value: f64 },

    #[error("value buffer holds {got} entries, expected {expected}")]
    ValueCountMismatch { expected: usize, got: usize },

    #[error("degenerate map: every quantized intensity is identical")]
    DegenerateMap,

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),

    #[error("mask has no foreground pixels")]
    EmptyMask,

    #[error("empty box list")]
    EmptyList,

    #[error("invalid bounding box t={t} b={b} l={l} r={r}: {reason}")]
    InvalidBox {
        t: u32,
        b: u32,
        l: u32,
        r: u32,
        reason: &'static str,
    },

    #[error("box t={t} b={b} l={l} r={r} exceeds image bounds {width}x{height}")]
    BoxOutOfBounds {
        t: u32,
        b: u32,
        l: u32,
        r: u32,
        width: u32,
        height: u32,
    },

    #[error("edge profile yields an infeasible constraint set")]
    InfeasibleConstraints,

    #[error("both the saliency and co-saliency maps are degenerate")]
    BothMapsDegenerate,

    #[error("co-saliency fusion needs at least two images, got {0}")]
    TooFewImages(usize),

    #[error("missing {kind} map for case '{stem}'")]
    MissingMap { kind: &'static str, stem: String },

    #[error("malformed boxes file {path} at line {line}: {reason}")]
    MalformedBoxesFile {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("no ground-truth boxes available")]
    NoGroundTruth,

    #[error("no results to evaluate")]
    EmptyResults,

    #[error("failed to write {path}: {source}")]
    WriteFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
