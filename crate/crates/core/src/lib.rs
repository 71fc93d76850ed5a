//! Spatial validation of map predictions: nearest-neighbour distance
//! diagnostics, Wasserstein distribution matching, random / block / kNNDM
//! cross-validation folds, built-in learners, design-based and true-error
//! evaluation, the area of applicability, and a synthetic experiment
//! harness.

pub mod aoa;
pub mod distributions;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod learner;
pub mod numeric;
pub mod resampling;
pub mod simulation;

pub use aoa::{aoa_mask, cv_dissimilarity, dissimilarity_index, AoaResult};
pub use distributions::{ecdf, wasserstein1, EmpiricalDistribution, WassersteinReport};
pub use error::{Error, Result};
pub use evaluation::{
    cross_validate, design_based_estimate, metrics, true_error, EvaluationReport, MetricSet,
};
pub use geometry::{nnd_between, nnd_cv, nnd_within, Metric, MetricKind, NndSample, PointSet};
pub use learner::{fit, predict, LearnerSpec, Model};
pub use resampling::{
    block_kfold, knndm_folds, random_kfold, split_train_test, FoldAssignment, Strategy,
};
