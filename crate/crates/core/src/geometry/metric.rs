use serde::{Deserialize, Serialize};

use super::pointset::PointSet;
use crate::error::{Error, Result};
use crate::numeric::{mean, sample_sd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    GeographicEuclidean,
    PredictorEuclidean,
}

impl MetricKind {
    pub fn label(self) -> &'static str {
        match self {
            MetricKind::GeographicEuclidean => "geographic-euclidean",
            MetricKind::PredictorEuclidean => "predictor-euclidean",
        }
    }
}

/// Per-column centring and scaling fitted on a training set, plus optional
/// per-column weights applied after scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub columns: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub weights: Vec<f64>,
    /// Zero-variance columns left out of the metric.
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Metric {
    /// Planar Euclidean distance on the point coordinates.
    Geographic,
    /// Euclidean distance between scaled (and optionally weighted) predictors.
    Predictor(Scaling),
}

/// Fits a predictor-space metric: per-column mean and sample standard
/// deviation over `train`. Constant columns are dropped and reported.
pub fn fit_scaling(train: &PointSet) -> Result<Metric> {
    if train.n_predictors() == 0 {
        return Err(Error::InvalidParameter(
            "point set has no predictor columns".into(),
        ));
    }
    let mut columns = Vec::new();
    let mut means = Vec::new();
    let mut sds = Vec::new();
    let mut dropped = Vec::new();
    for (j, name) in train.predictor_names().iter().enumerate() {
        let col = train.column(j);
        let sd = sample_sd(&col);
        if sd > 0.0 && sd.is_finite() {
            columns.push(name.clone());
            means.push(mean(&col));
            sds.push(sd);
        } else {
            log::warn!("predictor '{name}' has zero variance in the training data and is dropped from the metric");
            dropped.push(name.clone());
        }
    }
    if columns.is_empty() {
        return Err(Error::NoUsablePredictors);
    }
    let weights = vec![1.0; columns.len()];
    Ok(Metric::Predictor(Scaling {
        columns,
        means,
        sds,
        weights,
        dropped,
    }))
}

impl Metric {
    pub fn kind(&self) -> MetricKind {
        match self {
            Metric::Geographic => MetricKind::GeographicEuclidean,
            Metric::Predictor(_) => MetricKind::PredictorEuclidean,
        }
    }

    /// Builds the metric of the requested kind for `train`: geographic needs
    /// no fitting, predictor space fits scaling on `train`.
    pub fn for_training(kind: MetricKind, train: &PointSet) -> Result<Metric> {
        match kind {
            MetricKind::GeographicEuclidean => Ok(Metric::Geographic),
            MetricKind::PredictorEuclidean => fit_scaling(train),
        }
    }

    /// Attaches per-predictor weights. `weights` is indexed like the
    /// predictor columns of `schema` (the training set the scaling was
    /// fitted on); weights of dropped columns are ignored.
    pub fn with_weights(self, schema: &PointSet, weights: &[f64]) -> Result<Metric> {
        let Metric::Predictor(mut scaling) = self else {
            return Err(Error::InvalidParameter(
                "weights only apply to the predictor metric".into(),
            ));
        };
        if weights.len() != schema.n_predictors() {
            return Err(Error::InvalidParameter(format!(
                "{} weights given for {} predictors",
                weights.len(),
                schema.n_predictors()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "weights must be finite and nonnegative".into(),
            ));
        }
        scaling.weights = scaling
            .columns
            .iter()
            .map(|c| {
                weights[schema
                    .column_index(c)
                    .expect("scaling columns come from the schema")]
            })
            .collect();
        if scaling.weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidParameter(
                "weights of all usable predictors are zero".into(),
            ));
        }
        Ok(Metric::Predictor(scaling))
    }

    /// Maps every point into the Euclidean space in which this metric is
    /// plain Euclidean distance.
    pub fn embed(&self, points: &PointSet) -> Result<Embedding> {
        match self {
            Metric::Geographic => Ok(Embedding {
                dim: 2,
                data: points
                    .coords()
                    .iter()
                    .flat_map(|c| c.iter().copied())
                    .collect(),
            }),
            Metric::Predictor(s) => {
                let mapping = column_mapping_subset(&s.columns, points)?;
                let mut data = Vec::with_capacity(points.len() * s.columns.len());
                for i in 0..points.len() {
                    let row = points.predictor_row(i);
                    for (c, &j) in mapping.iter().enumerate() {
                        data.push(s.scale(c, row[j]));
                    }
                }
                Ok(Embedding {
                    dim: s.columns.len(),
                    data,
                })
            }
        }
    }
}

impl Scaling {
    #[inline]
    pub fn scale(&self, column: usize, value: f64) -> f64 {
        (value - self.means[column]) / self.sds[column] * self.weights[column]
    }
}

/// Columns used by the scaling must exist in `points`; other columns are
/// ignored.
fn column_mapping_subset(columns: &[String], points: &PointSet) -> Result<Vec<usize>> {
    let missing: Vec<String> = columns
        .iter()
        .filter(|c| points.column_index(c).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::SchemaMismatch {
            missing,
            extra: Vec::new(),
        });
    }
    Ok(columns
        .iter()
        .map(|c| points.column_index(c).unwrap())
        .collect())
}

/// Points as rows of a dense `n × dim` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    dim: usize,
    data: Vec<f64>,
}

impl Embedding {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "embedding shape");
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn subset(&self, indices: &[usize]) -> Embedding {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Embedding {
            dim: self.dim,
            data,
        }
    }
}

/// Squared Euclidean distance, accumulated in coordinate order.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}
