use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kdtree::KdTree;
use super::metric::{Embedding, Metric, MetricKind};
use super::pointset::PointSet;
use crate::error::{Error, Result};
use crate::resampling::FoldAssignment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NndRole {
    TrainingToTraining,
    PredictionToTraining,
    CvFold,
}

impl NndRole {
    pub fn label(self) -> &'static str {
        match self {
            NndRole::TrainingToTraining => "training-to-training",
            NndRole::PredictionToTraining => "prediction-to-training",
            NndRole::CvFold => "cv-fold",
        }
    }
}

/// One nearest-neighbour distance per query point.
#[derive(Debug, Clone, PartialEq)]
pub struct NndSample {
    pub distances: Vec<f64>,
    pub metric: MetricKind,
    pub role: NndRole,
}

/// Exact nearest-neighbour index over a point set under a metric.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    metric: Metric,
    tree: KdTree,
    ids: Vec<i64>,
}

pub fn build_index(points: &PointSet, metric: &Metric) -> Result<SpatialIndex> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let emb = metric.embed(points)?;
    for i in 0..emb.len() {
        if !emb.row(i).iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                id: points.ids()[i],
                what: "coordinate",
            });
        }
    }
    Ok(SpatialIndex {
        metric: metric.clone(),
        tree: KdTree::new(emb),
        ids: points.ids().to_vec(),
    })
}

impl SpatialIndex {
    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Nearest indexed point (row index, id, distance) for every query point.
    pub fn nearest(&self, query: &PointSet) -> Result<Vec<(usize, i64, f64)>> {
        let emb = self.metric.embed(query)?;
        Ok((0..emb.len())
            .into_par_iter()
            .map(|i| {
                let (j, sq) = self
                    .tree
                    .nearest(emb.row(i), None)
                    .expect("index is nonempty");
                (j, self.ids[j], sq.sqrt())
            })
            .collect())
    }
}

pub fn nnd_within(points: &PointSet, metric: &Metric) -> Result<NndSample> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    let emb = metric.embed(points)?;
    let distances = nnd_within_embedded(&emb);
    let duplicates = distances.iter().filter(|&&d| d == 0.0).count();
    if duplicates > 0 {
        log::warn!("{duplicates} points coincide with another point; their nearest-neighbour distance is 0");
    }
    Ok(NndSample {
        distances,
        metric: metric.kind(),
        role: NndRole::TrainingToTraining,
    })
}

pub fn nnd_between(query: &PointSet, reference: &PointSet, metric: &Metric) -> Result<NndSample> {
    if reference.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let q = metric.embed(query)?;
    let r = metric.embed(reference)?;
    Ok(NndSample {
        distances: nnd_between_embedded(&q, &r),
        metric: metric.kind(),
        role: NndRole::PredictionToTraining,
    })
}

/// Distance from each point to its nearest point in a different fold.
pub fn nnd_cv(points: &PointSet, folds: &FoldAssignment, metric: &Metric) -> Result<NndSample> {
    folds.validate_for(points.len())?;
    let emb = metric.embed(points)?;
    Ok(NndSample {
        distances: nnd_cv_embedded(&emb, folds.labels(), folds.k()),
        metric: metric.kind(),
        role: NndRole::CvFold,
    })
}

pub(crate) fn nnd_within_embedded(emb: &Embedding) -> Vec<f64> {
    let tree = KdTree::new(emb.clone());
    (0..emb.len())
        .into_par_iter()
        .map(|i| {
            tree.nearest(emb.row(i), Some(i))
                .map_or(f64::INFINITY, |(_, sq)| sq.sqrt())
        })
        .collect()
}

pub(crate) fn nnd_between_embedded(query: &Embedding, reference: &Embedding) -> Vec<f64> {
    let tree = KdTree::new(reference.clone());
    (0..query.len())
        .into_par_iter()
        .map(|i| {
            tree.nearest(query.row(i), None)
                .map_or(f64::INFINITY, |(_, sq)| sq.sqrt())
        })
        .collect()
}

/// Labels must be in `0..k`, each fold nonempty and no fold holding every point.
pub(crate) fn nnd_cv_embedded(emb: &Embedding, labels: &[usize], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; emb.len()];
    for fold in 0..k {
        let (held, rest): (Vec<usize>, Vec<usize>) =
            (0..emb.len()).partition(|&i| labels[i] == fold);
        if held.is_empty() {
            continue;
        }
        let tree = KdTree::new(emb.subset(&rest));
        for &i in &held {
            out[i] = tree
                .nearest(emb.row(i), None)
                .map_or(f64::INFINITY, |(_, sq)| sq.sqrt());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resampling::{FoldAssignment, Strategy};

    fn pts(coords: &[[f64; 2]]) -> PointSet {
        PointSet::new(
            (0..coords.len() as i64).collect(),
            coords.to_vec(),
            vec![],
            vec![],
            None,
        )
        .unwrap()
    }

    #[test]
    fn within_two_points_and_square() {
        let d = nnd_within(&pts(&[[0.0, 0.0], [3.0, 4.0]]), &Metric::Geographic).unwrap();
        assert_eq!(d.distances, vec![5.0, 5.0]);
        let sq = pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        assert_eq!(
            nnd_within(&sq, &Metric::Geographic).unwrap().distances,
            vec![1.0; 4]
        );
        assert!(nnd_within(&pts(&[[0.0, 0.0]]), &Metric::Geographic).is_err());
    }

    #[test]
    fn duplicates_are_zero() {
        let d = nnd_within(
            &pts(&[[1.0, 1.0], [1.0, 1.0], [5.0, 1.0]]),
            &Metric::Geographic,
        )
        .unwrap();
        assert_eq!(d.distances, vec![0.0, 0.0, 4.0]);
    }

    #[test]
    fn between_examples() {
        let p = pts(&[[0.0, 0.0], [2.0, 0.0]]);
        assert_eq!(
            nnd_between(&p, &p, &Metric::Geographic).unwrap().distances,
            vec![0.0, 0.0]
        );
        let q = PointSet::new(vec![9], vec![[3.0, 0.0]], vec![], vec![], None).unwrap();
        let r = pts(&[[0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(
            nnd_between(&q, &r, &Metric::Geographic).unwrap().distances,
            vec![2.0]
        );
        let empty = PointSet::empty(vec![]);
        assert!(nnd_between(&q, &empty, &Metric::Geographic).is_err());
    }

    #[test]
    fn cv_examples() {
        let p = pts(&[[0.0, 0.0], [3.0, 4.0]]);
        let f = FoldAssignment::from_labels(vec![0, 1], 2, Strategy::Random).unwrap();
        assert_eq!(
            nnd_cv(&p, &f, &Metric::Geographic).unwrap().distances,
            vec![5.0, 5.0]
        );

        // folds {a,b} and {c,d}: a=(0,0) b=(1,0) c=(0,2) d=(4,0)
        let p = pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [4.0, 0.0]]);
        let f = FoldAssignment::from_labels(vec![0, 0, 1, 1], 2, Strategy::Random).unwrap();
        let d = nnd_cv(&p, &f, &Metric::Geographic).unwrap().distances;
        assert_eq!(d, vec![2.0, 5f64.sqrt(), 2.0, 3.0]);

        let one = FoldAssignment::from_labels(vec![0, 0], 2, Strategy::Random);
        assert!(one.is_err());
    }

    #[test]
    fn index_answers() {
        let p = pts(&[[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]]);
        let idx = build_index(&p, &Metric::Geographic).unwrap();
        let q = PointSet::new(vec![0], vec![[1.1, 0.0]], vec![], vec![], None).unwrap();
        let ans = idx.nearest(&q).unwrap();
        assert_eq!(ans[0].1, 1);
    }
}
