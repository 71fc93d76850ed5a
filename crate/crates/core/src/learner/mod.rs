//! Built-in regressors behind a common fit/predict contract: a random
//! forest of CART trees and a k-nearest-neighbour regressor in scaled
//! predictor space.

mod tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fit_scaling, kdtree::KdTree, Metric, PointSet};
use crate::numeric::derive_seed;

pub use tree::{RegressionTree, TreeNode};
use tree::{TrainingData, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    RandomForest,
    Knn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub n_trees: usize,
    /// Features tried per split; `None` means `max(1, floor(p / 3))`.
    pub mtry: Option<usize>,
    pub min_node_size: usize,
    /// Bootstrap sample size as a fraction of n, drawn with replacement.
    pub sample_fraction: f64,
    /// Depth limit; `None` grows until `min_node_size`.
    pub max_depth: Option<usize>,
    pub neighbours: usize,
    pub seed: u64,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        Self {
            kind: LearnerKind::RandomForest,
            n_trees: 100,
            mtry: None,
            min_node_size: 5,
            sample_fraction: 1.0,
            max_depth: None,
            neighbours: 5,
            seed: 0,
        }
    }
}

impl LearnerSpec {
    pub fn knn(neighbours: usize) -> Self {
        Self {
            kind: LearnerKind::Knn,
            neighbours,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry.unwrap_or((p / 3).max(1))
    }

    fn validate(&self, p: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self.kind {
            LearnerKind::RandomForest => {
                if self.n_trees < 1 {
                    return bad("n_trees must be at least 1".into());
                }
                let mtry = self.resolved_mtry(p);
                if mtry < 1 || mtry > p {
                    return bad(format!("mtry = {mtry} outside 1..={p}"));
                }
                if self.min_node_size < 1 {
                    return bad("min_node_size must be at least 1".into());
                }
                if !(self.sample_fraction > 0.0 && self.sample_fraction.is_finite()) {
                    return bad(format!(
                        "sample_fraction must be positive, got {}",
                        self.sample_fraction
                    ));
                }
            }
            LearnerKind::Knn => {
                if self.neighbours < 1 {
                    return bad("neighbour count must be at least 1".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Fitted {
    Constant(f64),
    Forest {
        trees: Vec<RegressionTree>,
        y_min: f64,
        y_max: f64,
    },
    Knn {
        metric: Metric,
        tree: KdTree,
        y: Vec<f64>,
        k: usize,
    },
}

/// A fitted regressor. Immutable; safe to share across threads.
#[derive(Debug, Clone)]
pub struct Model {
    spec: LearnerSpec,
    predictor_names: Vec<String>,
    /// Training ids in ascending order.
    train_ids: Vec<i64>,
    fitted: Fitted,
}

pub fn fit(spec: &LearnerSpec, train: &PointSet) -> Result<Model> {
    let y_raw = train.require_response()?;
    if train.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: train.len(),
        });
    }
    let p = train.n_predictors();
    if p == 0 {
        return Err(Error::InvalidParameter(
            "training data has no predictor columns".into(),
        ));
    }
    spec.validate(p)?;

    // Canonical row order by id, so row order never affects the fit.
    let order = train.id_order();
    let train = train.subset(&order);
    let y: Vec<f64> = order.iter().map(|&i| y_raw[i]).collect();
    let predictor_names = train.predictor_names().to_vec();
    let train_ids = train.ids().to_vec();

    let (y_min, y_max) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let fitted = if y_min == y_max {
        log::warn!("constant training response {y_min}; the model predicts this constant");
        Fitted::Constant(y_min)
    } else {
        match spec.kind {
            LearnerKind::RandomForest => {
                let data = TrainingData {
                    x: train.predictors(),
                    y: &y,
                    p,
                };
                let params = TreeParams {
                    mtry: spec.resolved_mtry(p),
                    min_node_size: spec.min_node_size,
                    sample_size: ((spec.sample_fraction * train.len() as f64).round() as usize)
                        .max(1),
                    max_depth: spec.max_depth,
                };
                let trees = (0..spec.n_trees)
                    .into_par_iter()
                    .map(|t| {
                        let mut rng =
                            ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[t as u64]));
                        RegressionTree::grow(&data, &params, &mut rng)
                    })
                    .collect();
                Fitted::Forest {
                    trees,
                    y_min,
                    y_max,
                }
            }
            LearnerKind::Knn => {
                let metric = fit_scaling(&train)?;
                let tree = KdTree::new(metric.embed(&train)?);
                Fitted::Knn {
                    metric,
                    tree,
                    y,
                    k: spec.neighbours,
                }
            }
        }
    };
    Ok(Model {
        spec: spec.clone(),
        predictor_names,
        train_ids,
        fitted,
    })
}

pub fn predict(model: &Model, points: &PointSet) -> Result<Vec<f64>> {
    model.predict(points)
}

impl Model {
    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    pub fn predictor_names(&self) -> &[String] {
        &self.predictor_names
    }

    pub fn n_train(&self) -> usize {
        self.train_ids.len()
    }

    pub fn train_ids(&self) -> &[i64] {
        &self.train_ids
    }

    pub fn trained_on(&self, id: i64) -> bool {
        self.train_ids.binary_search(&id).is_ok()
    }

    /// Fitted trees; empty for non-forest models.
    pub fn trees(&self) -> &[RegressionTree] {
        match &self.fitted {
            Fitted::Forest { trees, .. } => trees,
            _ => &[],
        }
    }

    pub fn predict(&self, points: &PointSet) -> Result<Vec<f64>> {
        if points.is_empty() {
            return Ok(Vec::new());
        }
        let x = points.predictors_in_order(&self.predictor_names)?;
        let p = self.predictor_names.len();
        let out = match &self.fitted {
            Fitted::Constant(c) => vec![*c; points.len()],
            Fitted::Forest {
                trees,
                y_min,
                y_max,
            } => x
                .par_chunks(p)
                .map(|row| {
                    let s: f64 = trees.iter().map(|t| t.predict_row(row)).sum();
                    (s / trees.len() as f64).clamp(*y_min, *y_max)
                })
                .collect(),
            Fitted::Knn { metric, tree, y, k } => {
                let emb = metric.embed(points)?;
                (0..points.len())
                    .into_par_iter()
                    .map(|i| {
                        let nn = tree.k_nearest(emb.row(i), *k);
                        nn.iter().map(|&(j, _)| y[j]).sum::<f64>() / nn.len() as f64
                    })
                    .collect()
            }
        };
        Ok(out)
    }
}
