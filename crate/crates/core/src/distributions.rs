//! Empirical distance distributions and the Wasserstein-1 statistic used to
//! place a prediction task on the interpolation–extrapolation continuum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{nnd_between, nnd_cv, nnd_within, Metric, MetricKind, PointSet};
use crate::numeric::{sort_floats, CompensatedSum};
use crate::resampling::FoldAssignment;

/// Comparisons with fewer values than this on either side are flagged.
pub const SMALL_SAMPLE: usize = 10;

/// Tolerance of the pointwise ECDF dominance check.
pub const DOMINANCE_TOLERANCE: f64 = 1e-12;

/// A sorted, finite, nonempty sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
}

pub fn ecdf(values: &[f64]) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::new(values.to_vec())
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "empirical distribution needs at least one value".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value {v} in sample"
            )));
        }
        sort_floats(&mut values);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `F(x) = #{v ≤ x} / m`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    /// True when this distribution's ECDF is pointwise at least `other`'s
    /// (up to [`DOMINANCE_TOLERANCE`]) on the merged support, i.e. this
    /// sample is stochastically no larger than `other`.
    pub fn dominates_cdf_of(&self, other: &EmpiricalDistribution) -> bool {
        self.values
            .iter()
            .chain(&other.values)
            .all(|&x| self.cdf(x) >= other.cdf(x) - DOMINANCE_TOLERANCE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WassersteinReport {
    pub w: f64,
    pub n_first: usize,
    pub n_second: usize,
    pub metric: Option<MetricKind>,
}

impl WassersteinReport {
    pub fn is_small_sample(&self) -> bool {
        self.n_first < SMALL_SAMPLE || self.n_second < SMALL_SAMPLE
    }
}

/// `∫ |F(x) − G(x)| dx`, integrated exactly over the piecewise-constant ECDFs.
pub fn wasserstein1(f: &EmpiricalDistribution, g: &EmpiricalDistribution) -> WassersteinReport {
    let report = WassersteinReport {
        w: wasserstein_sorted(&f.values, &g.values),
        n_first: f.len(),
        n_second: g.len(),
        metric: None,
    };
    if report.is_small_sample() {
        log::warn!(
            "Wasserstein comparison of small samples ({} vs {} values)",
            report.n_first,
            report.n_second
        );
    }
    report
}

/// Exact W1 between two ascending, nonempty samples.
pub(crate) fn wasserstein_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (m, n) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut acc = CompensatedSum::new();
    // x is the current breakpoint; both ECDFs are constant on [x, next).
    let mut x = a[0].min(b[0]);
    while i < a.len() || j < b.len() {
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let next = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => break,
        };
        let diff = (i as f64 / m - j as f64 / n).abs();
        if diff > 0.0 {
            acc.add(diff * (next - x));
        }
        x = next;
    }
    acc.total()
}

fn report_from(a: Vec<f64>, b: Vec<f64>, metric: MetricKind) -> Result<WassersteinReport> {
    let mut r = wasserstein1(
        &EmpiricalDistribution::new(a)?,
        &EmpiricalDistribution::new(b)?,
    );
    r.metric = Some(metric);
    Ok(r)
}

/// W1 between training-to-training and prediction-to-training
/// nearest-neighbour distances.
pub fn extrapolation_index(
    train: &PointSet,
    prediction: &PointSet,
    metric: &Metric,
) -> Result<WassersteinReport> {
    if prediction.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let base = nnd_within(train, metric)?;
    let target = nnd_between(prediction, train, metric)?;
    report_from(base.distances, target.distances, metric.kind())
}

/// W1 between cross-validation fold distances and prediction-to-training
/// distances; the objective minimised by prediction-domain adaptive folding.
pub fn cv_match_index(
    train: &PointSet,
    folds: &FoldAssignment,
    prediction: &PointSet,
    metric: &Metric,
) -> Result<WassersteinReport> {
    if prediction.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let cv = nnd_cv(train, folds, metric)?;
    let target = nnd_between(prediction, train, metric)?;
    report_from(cv.distances, target.distances, metric.kind())
}
