//! k-nearest-neighbour distance matching (kNNDM).
//!
//! Searches fold assignments whose held-out-to-training nearest-neighbour
//! distances best match the prediction-to-training distances, measured by
//! Wasserstein-1. Candidates come from cutting a hierarchical clustering of
//! the training points into `q = k..=q_max` clusters and merging those
//! clusters into `k` size-balanced folds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hclust::{agglomerate, Linkage};
use super::{random_kfold, FoldAssignment, FoldParams, Strategy};
use crate::distributions::{wasserstein_sorted, EmpiricalDistribution};
use crate::error::{Error, Result};
use crate::geometry::{
    nnd_between_embedded, nnd_cv_embedded, nnd_within_embedded, Metric, PointSet,
};
use crate::numeric::{derive_seed, sort_floats};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KnndmOptions {
    /// Largest number of clusters tried; defaults to `min(n, 10·k)`.
    pub q_max: Option<usize>,
    pub linkage: Linkage,
}

/// One evaluated candidate. `q` is `None` for the random-fold shortcut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnndmCandidate {
    pub q: Option<usize>,
    pub w: f64,
}

pub fn default_q_max(n: usize, k: usize) -> usize {
    n.min(10 * k)
}

pub fn knndm_folds(
    train: &PointSet,
    prediction: &PointSet,
    k: usize,
    metric: &Metric,
    options: &KnndmOptions,
    seed: u64,
) -> Result<FoldAssignment> {
    let n = train.len();
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "k = {k}; at least 2 folds required"
        )));
    }
    if n < 2 * k {
        return Err(Error::TooFewPoints {
            needed: 2 * k,
            got: n,
        });
    }
    if prediction.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let q_max = options.q_max.unwrap_or_else(|| default_q_max(n, k)).min(n);
    if q_max < k {
        return Err(Error::InvalidParameter(format!(
            "q_max = {q_max} is below k = {k}"
        )));
    }

    let emb = metric.embed(train)?;
    if (1..n).all(|i| emb.row(i) == emb.row(0)) {
        return Err(Error::DegeneratePoints);
    }
    let pred = metric.embed(prediction)?;
    let mut target = nnd_between_embedded(&pred, &emb);
    sort_floats(&mut target);
    let base = nnd_within_embedded(&emb);

    let params = |chosen_q| FoldParams::Knndm {
        metric: metric.kind(),
        linkage: options.linkage,
        q_max,
        chosen_q,
    };
    let match_w = |labels: &[usize]| {
        let mut cv = nnd_cv_embedded(&emb, labels, k);
        sort_floats(&mut cv);
        wasserstein_sorted(&cv, &target)
    };

    let target_dist = EmpiricalDistribution::new(target.clone())?;
    let base_dist = EmpiricalDistribution::new(base)?;
    if target_dist.dominates_cdf_of(&base_dist) {
        log::info!("prediction distances are no larger than training spacing; using random folds");
        let random = random_kfold(n, k, seed)?;
        let w = match_w(random.labels());
        let mut out = FoldAssignment::build(
            random.labels().to_vec(),
            k,
            Strategy::Knndm,
            params(None),
            seed,
        );
        out.achieved_w = Some(w);
        out.audit = vec![KnndmCandidate { q: None, w }];
        return Ok(out);
    }

    let dendrogram = agglomerate(&emb, options.linkage);
    let candidates: Vec<(usize, Vec<usize>, f64)> = (k..=q_max)
        .into_par_iter()
        .map(|q| {
            let clusters = dendrogram.cut(q);
            let labels = merge_clusters_into_folds(&clusters, q, k, derive_seed(seed, &[q as u64]));
            let w = match_w(&labels);
            (q, labels, w)
        })
        .collect();

    // Ascending q with a strict comparison: ties go to the smallest q.
    let best =
        candidates.iter().enumerate().fold(
            0,
            |best, (i, c)| if c.2 < candidates[best].2 { i } else { best },
        );
    let (q, labels, w) = candidates[best].clone();
    let mut out = FoldAssignment::build(labels, k, Strategy::Knndm, params(Some(q)), seed);
    out.achieved_w = Some(w);
    out.audit = candidates
        .iter()
        .map(|c| KnndmCandidate {
            q: Some(c.0),
            w: c.2,
        })
        .collect();
    Ok(out)
}

/// Merges `q ≥ k` clusters into `k` folds: clusters are taken largest first
/// (seeded order among equal sizes) and each goes to the currently smallest
/// fold (lowest fold index on ties).
pub fn merge_clusters_into_folds(clusters: &[usize], q: usize, k: usize, seed: u64) -> Vec<usize> {
    assert!(q >= k, "cannot merge {q} clusters into {k} folds");
    let mut sizes = vec![0usize; q];
    for &c in clusters {
        sizes[c] += 1;
    }
    let mut order: Vec<usize> = (0..q).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]));

    let mut fold_of_cluster = vec![0usize; q];
    let mut counts = vec![0usize; k];
    for &c in &order {
        let f = (0..k).min_by_key(|&f| (counts[f], f)).unwrap();
        fold_of_cluster[c] = f;
        counts[f] += sizes[c];
    }
    clusters.iter().map(|&c| fold_of_cluster[c]).collect()
}
