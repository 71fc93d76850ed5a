use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{block_kfold, knndm_folds, random_kfold, KnndmOptions};
use crate::distributions::wasserstein_sorted;
use crate::error::Result;
use crate::geometry::{nnd_between_embedded, Metric, PointSet};
use crate::numeric::{derive_seed, sort_floats};

/// How to split one data set into a training and a test part.
#[derive(Debug, Clone)]
pub enum SplitStrategy<'a> {
    Random,
    Block {
        block_size: f64,
    },
    Knndm {
        prediction: &'a PointSet,
        metric: &'a Metric,
        options: KnndmOptions,
    },
}

/// Two-fold split. For random and block splits the test fold is drawn at
/// random; for kNNDM it is the fold whose distances to the remaining points
/// best match the prediction-to-training distances.
pub fn split_train_test(
    points: &PointSet,
    strategy: &SplitStrategy<'_>,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let folds = match strategy {
        SplitStrategy::Random => random_kfold(points.len(), 2, seed)?,
        SplitStrategy::Block { block_size } => block_kfold(points, *block_size, 2, seed)?,
        SplitStrategy::Knndm {
            prediction,
            metric,
            options,
        } => knndm_folds(points, prediction, 2, metric, options, seed)?,
    };
    let members = folds.members();
    let test_fold = match strategy {
        SplitStrategy::Knndm {
            prediction, metric, ..
        } => {
            let emb = metric.embed(points)?;
            let mut target = nnd_between_embedded(&metric.embed(prediction)?, &emb);
            sort_floats(&mut target);
            let w_of = |f: usize| {
                let test = emb.subset(&members[f]);
                let rest = emb.subset(&members[1 - f]);
                let mut d = nnd_between_embedded(&test, &rest);
                sort_floats(&mut d);
                wasserstein_sorted(&d, &target)
            };
            if w_of(1) < w_of(0) {
                1
            } else {
                0
            }
        }
        _ => ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x5e1ec7])).random_range(0..2),
    };
    Ok((members[1 - test_fold].clone(), members[test_fold].clone()))
}
