//! Fold construction: random k-fold, spatial block k-fold and
//! prediction-domain adaptive kNNDM folds, plus single train/test splits.

mod block;
pub mod hclust;
mod knndm;
mod split;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MetricKind;

pub use block::{block_kfold, block_kfold_with_offset};
pub use hclust::{agglomerate, Dendrogram, Linkage};
pub use knndm::{knndm_folds, merge_clusters_into_folds, KnndmCandidate, KnndmOptions};
pub use split::{split_train_test, SplitStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Random,
    Block,
    Knndm,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Block => "block",
            Strategy::Knndm => "knndm",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Strategy::Random),
            "block" => Ok(Strategy::Block),
            "knndm" => Ok(Strategy::Knndm),
            other => Err(format!(
                "unknown strategy '{other}' (expected random, block or knndm)"
            )),
        }
    }
}

/// Parameters a fold assignment was built with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FoldParams {
    /// Labels supplied externally.
    Given,
    Random,
    Block {
        block_size: f64,
        /// Grid origin shift applied below the bounding-box corner.
        offset: [f64; 2],
        n_blocks: usize,
    },
    Knndm {
        metric: MetricKind,
        linkage: Linkage,
        q_max: usize,
        /// Number of clusters of the selected candidate; `None` when the
        /// random-fold shortcut was taken.
        chosen_q: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldAssignment {
    labels: Vec<usize>,
    k: usize,
    strategy: Strategy,
    params: FoldParams,
    achieved_w: Option<f64>,
    seed: u64,
    audit: Vec<KnndmCandidate>,
}

impl FoldAssignment {
    /// Validates and wraps externally supplied labels.
    pub fn from_labels(labels: Vec<usize>, k: usize, strategy: Strategy) -> Result<Self> {
        validate_labels(&labels, k)?;
        Ok(Self {
            labels,
            k,
            strategy,
            params: FoldParams::Given,
            achieved_w: None,
            seed: 0,
            audit: Vec::new(),
        })
    }

    pub(crate) fn build(
        labels: Vec<usize>,
        k: usize,
        strategy: Strategy,
        params: FoldParams,
        seed: u64,
    ) -> Self {
        debug_assert!(validate_labels(&labels, k).is_ok());
        Self {
            labels,
            k,
            strategy,
            params,
            achieved_w: None,
            seed,
            audit: Vec::new(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn params(&self) -> &FoldParams {
        &self.params
    }

    pub fn achieved_w(&self) -> Option<f64> {
        self.achieved_w
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Every candidate evaluated by kNNDM, in evaluation order.
    pub fn audit(&self) -> &[KnndmCandidate] {
        &self.audit
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Point indices of each fold.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            m[l].push(i);
        }
        m
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        if self.labels.len() != n {
            return Err(Error::InvalidFolds(format!(
                "{} fold labels for {n} points",
                self.labels.len()
            )));
        }
        Ok(())
    }

    pub fn report(&self) -> FoldReport {
        FoldReport {
            strategy: self.strategy,
            k: self.k,
            seed: self.seed,
            params: self.params.clone(),
            achieved_w: self.achieved_w,
            fold_sizes: self.fold_sizes(),
        }
    }
}

fn validate_labels(labels: &[usize], k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidFolds(format!(
            "k = {k}; at least 2 folds required"
        )));
    }
    let mut seen = vec![false; k];
    for &l in labels {
        if l >= k {
            return Err(Error::InvalidFolds(format!("label {l} outside 0..{k}")));
        }
        seen[l] = true;
    }
    if let Some(empty) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidFolds(format!("fold {empty} is empty")));
    }
    Ok(())
}

/// Summary written next to fold files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub strategy: Strategy,
    pub k: usize,
    pub seed: u64,
    pub params: FoldParams,
    pub achieved_w: Option<f64>,
    pub fold_sizes: Vec<usize>,
}

/// Random permutation dealt round-robin into `k` folds; sizes differ by at most one.
pub fn random_kfold(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!(
            "random k-fold needs 2 ≤ k ≤ n (k = {k}, n = {n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut labels = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        labels[i] = pos % k;
    }
    Ok(FoldAssignment::build(
        labels,
        k,
        Strategy::Random,
        FoldParams::Random,
        seed,
    ))
}
