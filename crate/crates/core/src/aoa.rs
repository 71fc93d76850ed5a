//! Dissimilarity index (DI) in scaled predictor space and the area of
//! applicability (AOA): prediction points whose DI does not exceed a
//! threshold taken from the cross-validation dissimilarities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    distance, fit_scaling, nnd_between_embedded, nnd_cv_embedded, nnd_within_embedded, Embedding,
    Metric, PointSet,
};
use crate::numeric::{quantile_sorted, sort_floats, CompensatedSum};
use crate::resampling::FoldAssignment;

/// What the minimum distances are divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalisation {
    /// Mean over all pairs of training points.
    #[default]
    AllPairs,
    /// Mean nearest-neighbour distance among training points.
    MeanNearestNeighbour,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "p")]
pub enum ThresholdRule {
    /// `Q3 + 1.5·IQR` of the CV dissimilarities.
    #[default]
    UpperWhisker,
    Max,
    Quantile(f64),
}

impl ThresholdRule {
    pub fn threshold(self, cv_di: &[f64]) -> Result<f64> {
        if cv_di.is_empty() {
            return Err(Error::InvalidParameter(
                "no CV dissimilarities to derive a threshold from".into(),
            ));
        }
        let mut sorted = cv_di.to_vec();
        sort_floats(&mut sorted);
        Ok(match self {
            ThresholdRule::UpperWhisker => {
                let q1 = quantile_sorted(&sorted, 0.25);
                let q3 = quantile_sorted(&sorted, 0.75);
                q3 + 1.5 * (q3 - q1)
            }
            ThresholdRule::Max => sorted[sorted.len() - 1],
            ThresholdRule::Quantile(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!(
                        "threshold quantile {p} outside [0, 1]"
                    )));
                }
                quantile_sorted(&sorted, p)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoaResult {
    pub di: Vec<f64>,
    pub threshold: f64,
    pub inside: Vec<bool>,
    pub cv_di: Vec<f64>,
    pub rule: ThresholdRule,
}

impl AoaResult {
    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn inside_fraction(&self) -> f64 {
        self.inside_count() as f64 / self.inside.len() as f64
    }
}

/// Training points embedded in (weighted) scaled predictor space together
/// with the normalising mean distance.
#[derive(Debug, Clone)]
pub struct DissimilarityModel {
    metric: Metric,
    train: Embedding,
    mean_distance: f64,
    normalisation: Normalisation,
}

impl DissimilarityModel {
    pub fn fit(
        train: &PointSet,
        weights: Option<&[f64]>,
        normalisation: Normalisation,
    ) -> Result<Self> {
        if train.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: train.len(),
            });
        }
        let mut metric = fit_scaling(train)?;
        if let Some(w) = weights {
            metric = metric.with_weights(train, w)?;
        }
        let emb = metric.embed(train)?;
        let mean_distance = match normalisation {
            Normalisation::AllPairs => mean_pairwise_distance(&emb),
            Normalisation::MeanNearestNeighbour => {
                let d = nnd_within_embedded(&emb);
                d.iter().copied().collect::<CompensatedSum>().total() / d.len() as f64
            }
        };
        if mean_distance <= 0.0 {
            return Err(Error::DegeneratePoints);
        }
        Ok(Self {
            metric,
            train: emb,
            mean_distance,
            normalisation,
        })
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn mean_distance(&self) -> f64 {
        self.mean_distance
    }

    pub fn normalisation(&self) -> Normalisation {
        self.normalisation
    }

    pub fn di(&self, query: &PointSet) -> Result<Vec<f64>> {
        let q = self.metric.embed(query)?;
        Ok(self.normalise(nnd_between_embedded(&q, &self.train)))
    }

    pub fn cv_di(&self, folds: &FoldAssignment) -> Result<Vec<f64>> {
        folds.validate_for(self.train.len())?;
        Ok(self.normalise(nnd_cv_embedded(&self.train, folds.labels(), folds.k())))
    }

    fn normalise(&self, mut d: Vec<f64>) -> Vec<f64> {
        for v in &mut d {
            *v /= self.mean_distance;
        }
        d
    }
}

/// Mean Euclidean distance over all unordered pairs, summed in `(i, j)`
/// order with `i < j`.
pub fn mean_pairwise_distance(emb: &Embedding) -> f64 {
    let n = emb.len();
    let mut sum = CompensatedSum::new();
    for i in 0..n {
        for j in i + 1..n {
            sum.add(distance(emb.row(i), emb.row(j)));
        }
    }
    sum.total() / (n * (n - 1) / 2) as f64
}

pub fn dissimilarity_index(
    train: &PointSet,
    query: &PointSet,
    weights: Option<&[f64]>,
) -> Result<Vec<f64>> {
    DissimilarityModel::fit(train, weights, Normalisation::AllPairs)?.di(query)
}

pub fn cv_dissimilarity(
    train: &PointSet,
    folds: &FoldAssignment,
    weights: Option<&[f64]>,
) -> Result<Vec<f64>> {
    DissimilarityModel::fit(train, weights, Normalisation::AllPairs)?.cv_di(folds)
}

pub fn aoa_mask(di: &[f64], cv_di: &[f64]) -> Result<AoaResult> {
    aoa_mask_with(di, cv_di, ThresholdRule::UpperWhisker)
}

pub fn aoa_mask_with(di: &[f64], cv_di: &[f64], rule: ThresholdRule) -> Result<AoaResult> {
    if di.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let threshold = rule.threshold(cv_di)?;
    Ok(AoaResult {
        inside: di.iter().map(|&d| d <= threshold).collect(),
        di: di.to_vec(),
        threshold,
        cv_di: cv_di.to_vec(),
        rule,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AoaOptions {
    pub weights: Option<Vec<f64>>,
    pub normalisation: Normalisation,
    pub rule: ThresholdRule,
}

/// DI for `query`, CV dissimilarities for `folds`, and the resulting mask.
pub fn area_of_applicability(
    train: &PointSet,
    query: &PointSet,
    folds: &FoldAssignment,
    options: &AoaOptions,
) -> Result<AoaResult> {
    let model = DissimilarityModel::fit(train, options.weights.as_deref(), options.normalisation)?;
    aoa_mask_with(&model.di(query)?, &model.cv_di(folds)?, options.rule)
}
