//! Fixture generators for the benchmarks.

use geovalid::PointSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` points uniform on a 100×100 square with `p` uniform predictors and a
/// response that depends on the first two.
pub fn uniform_points(n: usize, p: usize, seed: u64) -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)])
        .collect();
    let predictors: Vec<f64> = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let response = predictors
        .chunks(p)
        .map(|x| x[0] + 0.5 * x[p.min(2) - 1] * x[0] + rng.random_range(-0.1..0.1))
        .collect();
    PointSet::new(
        (0..n as i64).collect(),
        coords,
        (0..p).map(|j| format!("x{j}")).collect(),
        predictors,
        Some(response),
    )
    .expect("valid fixture")
}

/// `n` points in `clusters` tight groups; predictors as in [`uniform_points`].
pub fn clustered_points(n: usize, p: usize, clusters: usize, seed: u64) -> PointSet {
    let base = uniform_points(n, p, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc1u64);
    let centres: Vec<[f64; 2]> = (0..clusters)
        .map(|_| [rng.random_range(10.0..90.0), rng.random_range(10.0..90.0)])
        .collect();
    let coords = (0..n)
        .map(|i| {
            let c = centres[i % clusters];
            [
                c[0] + rng.random_range(-4.0..4.0),
                c[1] + rng.random_range(-4.0..4.0),
            ]
        })
        .collect();
    PointSet::new(
        base.ids().to_vec(),
        coords,
        base.predictor_names().to_vec(),
        base.predictors().to_vec(),
        base.response().map(<[f64]>::to_vec),
    )
    .expect("valid fixture")
}

/// Cell centres of an `side × side` grid scaled onto the 100×100 square,
/// with `p` predictors and no response.
pub fn grid(side: usize, p: usize) -> PointSet {
    let n = side * side;
    let step = 100.0 / side as f64;
    let coords = (0..n)
        .map(|c| {
            [
                ((c % side) as f64 + 0.5) * step,
                ((c / side) as f64 + 0.5) * step,
            ]
        })
        .collect();
    let predictors = (0..n * p)
        .map(|i| (((i / p) % side) as f64 * 0.37 + (i % p) as f64).sin())
        .collect();
    PointSet::new(
        (0..n as i64).collect(),
        coords,
        (0..p).map(|j| format!("x{j}")).collect(),
        predictors,
        None,
    )
    .expect("valid fixture")
}
