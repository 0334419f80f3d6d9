use thiserror::Error;

use crate::lattice::{LatticeKind, Point};

#[derive(Debug, Error)]
pub enum Error {
    #[error("box half-width must be at least 1, got {0}")]
    InvalidBoxSize(u32),

    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),

    #[error("probability list must be sorted ascending")]
    UnsortedProbabilities,

    #[error("vertex ({}, {}) lies outside the box", .0.x, .0.y)]
    OutsideBox(Point),

    #[error("operation `{op}` is not available for the {kind} model")]
    UnsupportedModel { op: &'static str, kind: LatticeKind },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("no left-right open crossing exists")]
    NoCrossing,

    #[error("invalid arm specification: {0}")]
    InvalidArmSpec(String),

    #[error("arm radius {radius} does not fit in the box around ({}, {})", .center.x, .center.y)]
    RadiusTooLarge { radius: u32, center: Point },

    #[error("epsilon must lie in (0, 1], got {0}")]
    InvalidEpsilon(f64),

    #[error("window must be at least 2, got {0}")]
    InvalidWindow(usize),

    #[error("detour splice does not produce a self-avoiding path: {0}")]
    SpliceConflict(String),

    #[error("cannot merge statistics `{left}` and `{right}`")]
    StatisticMismatch { left: String, right: String },

    #[error("exponent fit: {0}")]
    InvalidFit(String),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("no records to emit")]
    EmptyRecords,

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
