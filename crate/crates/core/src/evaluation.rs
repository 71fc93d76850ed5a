//! Error metrics, pooled cross-validation, design-based estimation from a
//! simple random test sample, and true error against a known truth grid.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::learner::{fit, LearnerSpec, Model};
use crate::numeric::CompensatedSum;
use crate::resampling::FoldAssignment;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub rmse: f64,
    pub mae: f64,
    /// `1 − SSE/SST`; `None` when the observations have zero variance.
    pub r2: Option<f64>,
    pub n_eval: usize,
}

pub fn metrics(pred: &[f64], obs: &[f64]) -> Result<MetricSet> {
    if pred.len() != obs.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions for {} observations",
            pred.len(),
            obs.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidParameter(
            "metrics need at least one observation".into(),
        ));
    }
    let n = obs.len() as f64;
    let mut sse = CompensatedSum::new();
    let mut sae = CompensatedSum::new();
    let mut sum_obs = CompensatedSum::new();
    for (&p, &o) in pred.iter().zip(obs) {
        let e = p - o;
        sse.add(e * e);
        sae.add(e.abs());
        sum_obs.add(o);
    }
    let mean_obs = sum_obs.total() / n;
    let sst: f64 = obs
        .iter()
        .map(|&o| (o - mean_obs) * (o - mean_obs))
        .collect::<CompensatedSum>()
        .total();
    let sse = sse.total();
    let rmse = (sse / n).sqrt();
    let mae = sae.total() / n;
    Ok(MetricSet {
        // Guard against the last-bit rounding of the two separate sums.
        rmse: rmse.max(mae),
        mae,
        r2: (sst > 0.0).then(|| 1.0 - sse / sst),
        n_eval: obs.len(),
    })
}

/// Metrics restricted to the positions where `mask` is true.
pub fn masked_metrics(pred: &[f64], obs: &[f64], mask: &[bool]) -> Result<MetricSet> {
    if mask.len() != pred.len() {
        return Err(Error::LengthMismatch(format!(
            "mask of {} for {} predictions",
            mask.len(),
            pred.len()
        )));
    }
    let (p, o): (Vec<f64>, Vec<f64>) = pred
        .iter()
        .zip(obs)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((&p, &o), _)| (p, o))
        .unzip();
    if p.is_empty() {
        return Err(Error::EmptyAoa);
    }
    metrics(&p, &o)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// Metrics over all held-out predictions pooled together.
    pub pooled: MetricSet,
    pub per_fold: Vec<MetricSet>,
    /// Held-out prediction for every training point, in point order.
    pub predictions: Vec<f64>,
}

/// For each fold: fit on the other folds, predict the held-out fold. Every
/// fold is fitted with the same learner seed, so relabelling folds does not
/// change the result.
pub fn cross_validate(
    train: &PointSet,
    folds: &FoldAssignment,
    spec: &LearnerSpec,
) -> Result<CvResult> {
    let obs = train.require_response()?;
    folds.validate_for(train.len())?;
    let members = folds.members();
    let fold_predictions: Vec<Vec<f64>> = members
        .par_iter()
        .map(|held| -> Result<Vec<f64>> {
            let rest: Vec<usize> = (0..train.len()).filter(|i| !held.contains(i)).collect();
            let test_set = train.subset(held);
            let train_set = train.subset(&rest);
            check_disjoint(train_set.ids(), test_set.ids())?;
            if train_set.len() < 2 {
                return Err(Error::TooFewPoints {
                    needed: 2,
                    got: train_set.len(),
                });
            }
            let model = fit(spec, &train_set)?;
            model.predict(&test_set)
        })
        .collect::<Result<_>>()?;

    let mut predictions = vec![0.0; train.len()];
    let mut per_fold = Vec::with_capacity(members.len());
    for (held, preds) in members.iter().zip(&fold_predictions) {
        for (&i, &p) in held.iter().zip(preds) {
            predictions[i] = p;
        }
        let held_obs: Vec<f64> = held.iter().map(|&i| obs[i]).collect();
        per_fold.push(metrics(preds, &held_obs)?);
    }
    Ok(CvResult {
        pooled: metrics(&predictions, obs)?,
        per_fold,
        predictions,
    })
}

fn check_disjoint(train_ids: &[i64], test_ids: &[i64]) -> Result<()> {
    let train: HashSet<i64> = train_ids.iter().copied().collect();
    match test_ids.iter().find(|id| train.contains(id)) {
        Some(&id) => Err(Error::Leakage(id)),
        None => Ok(()),
    }
}

/// Equal-weight metrics over a simple random test sample: the
/// equal-inclusion-probability case of design-based inference.
pub fn design_based_estimate(model: &Model, test: &PointSet) -> Result<MetricSet> {
    let obs = test.require_response()?;
    if let Some(&id) = test.ids().iter().find(|&&id| model.trained_on(id)) {
        return Err(Error::Leakage(id));
    }
    metrics(&model.predict(test)?, obs)
}

/// Metrics over every cell of the truth grid, or only over cells where
/// `mask` is true.
pub fn true_error(model: &Model, truth: &PointSet, mask: Option<&[bool]>) -> Result<MetricSet> {
    let obs = truth.require_response()?;
    let pred = model.predict(truth)?;
    match mask {
        None => metrics(&pred, obs),
        Some(m) => masked_metrics(&pred, obs, m),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalStrategy {
    DesignBased,
    RandomCv,
    BlockCv,
    KnndmCv,
}

impl EvalStrategy {
    pub const ALL: [EvalStrategy; 4] = [
        EvalStrategy::DesignBased,
        EvalStrategy::RandomCv,
        EvalStrategy::BlockCv,
        EvalStrategy::KnndmCv,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EvalStrategy::DesignBased => "design-based",
            EvalStrategy::RandomCv => "random-cv",
            EvalStrategy::BlockCv => "block-cv",
            EvalStrategy::KnndmCv => "knndm-cv",
        }
    }
}

impl fmt::Display for EvalStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EvalStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        EvalStrategy::ALL
            .into_iter()
            .find(|e| e.label() == s)
            .ok_or_else(|| format!("unknown evaluation strategy '{s}'"))
    }
}

/// One row of an evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub repetition: usize,
    pub design: String,
    pub strategy: EvalStrategy,
    pub seed: u64,
    pub n_train: usize,
    pub k: Option<usize>,
    pub estimated: MetricSet,
    pub true_whole_area: Option<MetricSet>,
    pub true_within_aoa: Option<MetricSet>,
    pub aoa_threshold: Option<f64>,
    pub extrapolation_index: Option<f64>,
    pub cv_match_index: Option<f64>,
}

impl EvaluationReport {
    /// Estimated minus true RMSE; positive means the error was overestimated.
    pub fn rmse_difference(&self) -> Option<f64> {
        self.true_whole_area.map(|t| self.estimated.rmse - t.rmse)
    }

    pub fn rmse_difference_aoa(&self) -> Option<f64> {
        self.true_within_aoa.map(|t| self.estimated.rmse - t.rmse)
    }
}

pub const REPORT_COLUMNS: [&str; 23] = [
    "repetition",
    "design",
    "strategy",
    "seed",
    "n_train",
    "k",
    "est_rmse",
    "est_mae",
    "est_r2",
    "est_n",
    "true_rmse",
    "true_mae",
    "true_r2",
    "true_n",
    "aoa_rmse",
    "aoa_mae",
    "aoa_r2",
    "aoa_n",
    "aoa_threshold",
    "diff_rmse",
    "diff_rmse_aoa",
    "extrapolation_w",
    "cv_match_w",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn metric_fields(m: Option<&MetricSet>) -> [String; 4] {
    match m {
        Some(m) => [
            m.rmse.to_string(),
            m.mae.to_string(),
            opt(m.r2),
            m.n_eval.to_string(),
        ],
        None => Default::default(),
    }
}

/// Writes reports as comma-separated text with the [`REPORT_COLUMNS`] header.
pub fn write_reports_csv<W: Write>(reports: &[EvaluationReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_COLUMNS)?;
    for r in reports {
        let mut row = vec![
            r.repetition.to_string(),
            r.design.clone(),
            r.strategy.label().to_string(),
            r.seed.to_string(),
            r.n_train.to_string(),
            opt(r.k),
        ];
        row.extend(metric_fields(Some(&r.estimated)));
        row.extend(metric_fields(r.true_whole_area.as_ref()));
        row.extend(metric_fields(r.true_within_aoa.as_ref()));
        row.push(opt(r.aoa_threshold));
        row.push(opt(r.rmse_difference()));
        row.push(opt(r.rmse_difference_aoa()));
        row.push(opt(r.extrapolation_index));
        row.push(opt(r.cv_match_index));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resampling::{random_kfold, Strategy};

    #[test]
    fn metric_examples() {
        let obs = [1.0, 2.0, 4.0];
        let m = metrics(&obs, &obs).unwrap();
        assert_eq!((m.rmse, m.mae, m.r2, m.n_eval), (0.0, 0.0, Some(1.0), 3));
        let shifted: Vec<f64> = obs.iter().map(|o| o + 1.0).collect();
        let m = metrics(&shifted, &obs).unwrap();
        assert_eq!((m.rmse, m.mae), (1.0, 1.0));
        let m = metrics(&[1.0, 2.0], &[3.0, 3.0]).unwrap();
        assert_eq!(m.r2, None);
        assert!(metrics(&[], &[]).is_err());
        assert!(metrics(&[1.0], &[1.0, 2.0]).is_err());
        // worse than the mean → negative r2
        assert!(metrics(&[4.0, 1.0], &[1.0, 4.0]).unwrap().r2.unwrap() < 0.0);
    }

    #[test]
    fn masked_metrics_single_cell_and_empty() {
        let m = masked_metrics(&[1.0, 5.0, 2.0], &[1.0, 2.0, 2.0], &[false, true, false]).unwrap();
        assert_eq!((m.rmse, m.mae, m.n_eval), (3.0, 3.0, 1));
        assert!(matches!(
            masked_metrics(&[1.0], &[1.0], &[false]),
            Err(Error::EmptyAoa)
        ));
    }

    fn grid(ids: std::ops::Range<i64>, f: impl Fn(f64) -> f64) -> PointSet {
        let n = ids.clone().count();
        let xs: Vec<f64> = ids.clone().map(|i| i as f64).collect();
        PointSet::new(
            ids.collect(),
            xs.iter().map(|&x| [x, 0.0]).collect(),
            vec!["x".into()],
            xs.clone(),
            Some(xs.iter().map(|&x| f(x)).collect()),
        )
        .map(|p| {
            assert_eq!(p.len(), n);
            p
        })
        .unwrap()
    }

    #[test]
    fn leakage_guard_and_census() {
        let train = grid(0..20, |x| x * 0.5);
        let model = fit(&LearnerSpec::knn(2), &train).unwrap();
        assert!(matches!(
            design_based_estimate(&model, &grid(15..30, |x| x)),
            Err(Error::Leakage(15))
        ));

        let truth = grid(100..140, |x| (x / 7.0).sin());
        let census = design_based_estimate(&model, &truth).unwrap();
        assert_eq!(census, true_error(&model, &truth, None).unwrap());

        let one = truth.subset(&[3]);
        let m = design_based_estimate(&model, &one).unwrap();
        let err = model.predict(&one).unwrap()[0] - one.response().unwrap()[0];
        assert_eq!(m.rmse, err.abs());
        assert_eq!(m.n_eval, 1);

        let none = vec![false; truth.len()];
        assert!(matches!(
            true_error(&model, &truth, Some(&none)),
            Err(Error::EmptyAoa)
        ));
    }

    #[test]
    fn perfect_learner_on_duplicated_points() {
        // each location appears twice (ids differ) so 1-NN finds its twin
        let n = 20;
        let xs: Vec<f64> = (0..n).map(|i| (i / 2) as f64).collect();
        let train = PointSet::new(
            (0..n as i64).collect(),
            xs.iter().map(|&x| [x, 0.0]).collect(),
            vec!["x".into()],
            xs.clone(),
            Some(xs.iter().map(|x| x * x).collect()),
        )
        .unwrap();
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let folds = FoldAssignment::from_labels(labels, 2, Strategy::Random).unwrap();
        let cv = cross_validate(&train, &folds, &LearnerSpec::knn(1)).unwrap();
        assert_eq!(cv.pooled.rmse, 0.0);
    }

    #[test]
    fn fold_relabelling_does_not_change_pooled_metrics() {
        let train = grid(0..60, |x| (x / 5.0).sin() + x * 0.01);
        let folds = random_kfold(60, 4, 3).unwrap();
        let relabelled: Vec<usize> = folds.labels().iter().map(|&l| (l + 1) % 4).collect();
        let relabelled = FoldAssignment::from_labels(relabelled, 4, Strategy::Random).unwrap();
        let spec = LearnerSpec {
            n_trees: 20,
            ..Default::default()
        };
        let a = cross_validate(&train, &folds, &spec).unwrap();
        let b = cross_validate(&train, &relabelled, &spec).unwrap();
        assert_eq!(a.pooled, b.pooled);
        assert_eq!(a.predictions, b.predictions);
    }

    #[test]
    fn report_csv_columns() {
        let r = EvaluationReport {
            repetition: 0,
            design: "random".into(),
            strategy: EvalStrategy::RandomCv,
            seed: 7,
            n_train: 10,
            k: Some(2),
            estimated: MetricSet {
                rmse: 2.0,
                mae: 1.0,
                r2: None,
                n_eval: 10,
            },
            true_whole_area: Some(MetricSet {
                rmse: 1.5,
                mae: 1.0,
                r2: Some(0.5),
                n_eval: 100,
            }),
            true_within_aoa: None,
            aoa_threshold: None,
            extrapolation_index: Some(0.25),
            cv_match_index: None,
        };
        let mut buf = Vec::new();
        write_reports_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), REPORT_COLUMNS.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "0,random,random-cv,7,10,2,2,1,,10,1.5,1,0.5,100,,,,,,0.5,,0.25,"
        );
    }
}
