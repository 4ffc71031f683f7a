//! Agreement metrics and validation harnesses.

mod curves;
mod cv;
mod metrics;
mod report;

use thiserror::Error;

use crate::flows::FlowError;
use crate::models::ModelError;
use crate::NodeId;

pub use curves::{
    cpc_grid, ratio_vs_distance, thresholded_r2, trip_distance_ccdf, CpcCell, CpcGrid, RatioBin, RatioCurve,
    ThresholdPoint, ThresholdedR2, MIN_THRESHOLD_ENTRIES,
};
pub use cv::{kfold_cv, learning_curve, spatial_cv};
pub use metrics::{cpc, pearson, r_squared, PairedSeries};
pub use report::{Curve, EvalReport, FoldDetail, ModelMetrics};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("series lengths differ ({truth} truth, {pred} predicted)")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("need at least 2 paired values, got {0}")]
    TooShort(usize),
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("both flow matrices are empty")]
    BothEmpty,
    #[error("cannot split {entries} flows into {k} folds")]
    InvalidFolds { k: usize, entries: usize },
    #[error("{label}: {source}")]
    Fit { label: String, source: ModelError },
    #[error("node {0} has no location")]
    MissingLocation(NodeId),
    #[error("{half} half has {flows} internal flows, need at least {needed}")]
    SparseHalf { half: &'static str, flows: usize, needed: usize },
    #[error("repeats must be at least 1")]
    InvalidRepeats,
    #[error("{0} must be finite and strictly ascending")]
    Unsorted(&'static str),
    #[error("fraction {fraction}: {reason}")]
    InvalidFraction { fraction: f64, reason: String },
    #[error("fraction {fraction}: {source}")]
    FractionFit { fraction: f64, source: ModelError },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
