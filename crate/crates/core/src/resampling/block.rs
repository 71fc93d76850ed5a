use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FoldAssignment, FoldParams, Strategy};
use crate::error::{Error, Result};
use crate::geometry::PointSet;

/// Spatial block k-fold with the block grid anchored at the lower-left
/// corner of the bounding box.
pub fn block_kfold(
    points: &PointSet,
    block_size: f64,
    k: usize,
    seed: u64,
) -> Result<FoldAssignment> {
    block_kfold_with_offset(points, block_size, k, seed, false)
}

/// Spatial block k-fold. With `random_offset`, the grid origin is shifted
/// by a seeded amount in `[0, block_size)` along each axis.
///
/// Nonempty blocks are shuffled, then each block in turn goes to the fold
/// with the fewest points so far (lowest fold index on ties).
pub fn block_kfold_with_offset(
    points: &PointSet,
    block_size: f64,
    k: usize,
    seed: u64,
    random_offset: bool,
) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "k = {k}; at least 2 folds required"
        )));
    }
    if !(block_size > 0.0 && block_size.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "block size must be positive, got {block_size}"
        )));
    }
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = if random_offset {
        [
            rng.random_range(0.0..block_size),
            rng.random_range(0.0..block_size),
        ]
    } else {
        [0.0, 0.0]
    };
    let min_x = points
        .coords()
        .iter()
        .map(|c| c[0])
        .fold(f64::INFINITY, f64::min);
    let min_y = points
        .coords()
        .iter()
        .map(|c| c[1])
        .fold(f64::INFINITY, f64::min);
    let origin = [min_x - offset[0], min_y - offset[1]];

    let mut blocks: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, c) in points.coords().iter().enumerate() {
        let bx = ((c[0] - origin[0]) / block_size).floor() as i64;
        let by = ((c[1] - origin[1]) / block_size).floor() as i64;
        blocks.entry((bx, by)).or_default().push(i);
    }
    if blocks.len() < k {
        return Err(Error::TooFewBlocks {
            blocks: blocks.len(),
            k,
        });
    }
    let n_blocks = blocks.len();
    let mut blocks: Vec<Vec<usize>> = blocks.into_values().collect();
    blocks.shuffle(&mut rng);

    let mut counts = vec![0usize; k];
    let mut labels = vec![0usize; points.len()];
    for members in &blocks {
        let fold = (0..k).min_by_key(|&f| (counts[f], f)).unwrap();
        counts[fold] += members.len();
        for &i in members {
            labels[i] = fold;
        }
    }
    Ok(FoldAssignment::build(
        labels,
        k,
        Strategy::Block,
        FoldParams::Block {
            block_size,
            offset,
            n_blocks,
        },
        seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn single_block_is_infeasible() {
        let p = pts(&[[0.0, 0.0], [0.5, 0.5], [0.9, 0.1]]);
        let err = block_kfold(&p, 10.0, 2, 0).unwrap_err();
        assert!(matches!(err, Error::TooFewBlocks { blocks: 1, k: 2 }));
        assert!(err.to_string().contains("finer blocks or smaller k"));
    }

    #[test]
    fn one_point_per_block() {
        let p = pts(&[[0.5, 0.5], [1.5, 0.5], [0.5, 1.5], [1.5, 1.5]]);
        let f = block_kfold(&p, 1.0, 4, 3).unwrap();
        let mut labels = f.labels().to_vec();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn blocks_stay_together_and_folds_balance() {
        let coords: Vec<[f64; 2]> = (0..400)
            .map(|i| [(i % 20) as f64, (i / 20) as f64])
            .collect();
        let p = pts(&coords);
        for offset in [false, true] {
            let f = block_kfold_with_offset(&p, 5.0, 4, 11, offset).unwrap();
            let FoldParams::Block { offset: o, .. } = f.params() else {
                panic!()
            };
            let origin = [-o[0], -o[1]];
            let mut block_fold = std::collections::HashMap::new();
            for (i, c) in coords.iter().enumerate() {
                let key = (
                    ((c[0] - origin[0]) / 5.0).floor() as i64,
                    ((c[1] - origin[1]) / 5.0).floor() as i64,
                );
                let prev = block_fold.insert(key, f.labels()[i]);
                assert!(prev.is_none_or(|p| p == f.labels()[i]));
            }
            assert!(f.fold_sizes().iter().all(|&s| s > 0));
            assert_eq!(f, block_kfold_with_offset(&p, 5.0, 4, 11, offset).unwrap());
        }
        // 16 equal blocks of 25 over 4 folds balance exactly
        assert_eq!(
            block_kfold(&p, 5.0, 4, 2).unwrap().fold_sizes(),
            vec![100; 4]
        );
    }
}
