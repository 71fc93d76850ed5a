#![allow(dead_code)]

use geovalid::geometry::fit_scaling;
use geovalid::numeric::CompensatedSum;
use geovalid::{
    cv_dissimilarity, dissimilarity_index, ecdf, nnd_between, nnd_cv, nnd_within, random_kfold,
    wasserstein1, Metric, PointSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` points with `p` predictors. Clustered sets put points around a few
/// random centres, and every tenth point duplicates an earlier location.
pub fn random_points(seed: u64, n: usize, p: usize, clustered: bool) -> PointSet {
    let mut r = rng(seed);
    let centres: Vec<[f64; 2]> = (0..4)
        .map(|_| [r.random_range(0.0..100.0), r.random_range(0.0..100.0)])
        .collect();
    let mut coords: Vec<[f64; 2]> = Vec::with_capacity(n);
    for i in 0..n {
        let c = if clustered && i % 10 == 9 {
            coords[r.random_range(0..i)]
        } else if clustered {
            let c = centres[i % centres.len()];
            [
                c[0] + r.random_range(-3.0..3.0),
                c[1] + r.random_range(-3.0..3.0),
            ]
        } else {
            [r.random_range(0.0..100.0), r.random_range(0.0..100.0)]
        };
        coords.push(c);
    }
    let predictors: Vec<f64> = coords
        .iter()
        .flat_map(|c| {
            let (x, y) = (c[0], c[1]);
            (0..p).map(move |j| (x * (j as f64 + 1.0) * 0.05).sin() + y * 0.01 * j as f64)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .map(|v| v + r.random_range(-0.1..0.1))
        .collect();
    let response = (0..n)
        .map(|i| predictors[i * p] + r.random_range(-0.5..0.5))
        .collect();
    PointSet::new(
        (0..n as i64).map(|i| 1000 + 3 * i).collect(),
        coords,
        (0..p).map(|j| format!("v{j}")).collect(),
        predictors,
        Some(response),
    )
    .unwrap()
}

pub fn sq(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let d = a[k] - b[k];
        s += d * d;
    }
    s
}

/// Minimum distance from `q` to any row of `rows` accepted by `keep`.
pub fn brute_min(q: &[f64], rows: &[Vec<f64>], keep: impl Fn(usize) -> bool) -> f64 {
    let mut best = f64::INFINITY;
    for (j, r) in rows.iter().enumerate() {
        if keep(j) {
            best = best.min(sq(q, r));
        }
    }
    best.sqrt()
}

pub fn geo_rows(p: &PointSet) -> Vec<Vec<f64>> {
    p.coords().iter().map(|c| c.to_vec()).collect()
}

/// W1 by integrating |F − G| between consecutive support points, with
/// both ECDFs evaluated by direct counting.
pub fn w1_oracle(a: &[f64], b: &[f64]) -> f64 {
    let mut support: Vec<f64> = a.iter().chain(b).copied().collect();
    support.sort_by(f64::total_cmp);
    support.dedup();
    let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
    let mut total = CompensatedSum::new();
    for w in support.windows(2) {
        total.add((cdf(a, w[0]) - cdf(b, w[0])).abs() * (w[1] - w[0]));
    }
    total.total()
}

/// Rows of the space `metric` measures in, built straight from the fitted
/// scaling parameters.
pub fn embed_rows(points: &PointSet, metric: &Metric) -> Vec<Vec<f64>> {
    match metric {
        Metric::Geographic => geo_rows(points),
        Metric::Predictor(s) => (0..points.len())
            .map(|i| {
                let row = points.predictor_row(i);
                s.columns
                    .iter()
                    .enumerate()
                    .map(|(c, name)| {
                        let j = points.column_index(name).unwrap();
                        (row[j] - s.means[c]) / s.sds[c] * s.weights[c]
                    })
                    .collect()
            })
            .collect(),
    }
}

fn same_bits(what: &str, got: &[f64], want: &[f64]) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!(
            "{what}: {} values, oracle has {}",
            got.len(),
            want.len()
        ));
    }
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        if g.to_bits() != w.to_bits() {
            return Err(format!("{what}[{i}]: {g} vs oracle {w}"));
        }
    }
    Ok(())
}

/// Checks every nearest-neighbour and dissimilarity quantity on one random
/// instance against exhaustive search, bit for bit.
pub fn check_distance_oracles(seed: u64, n: usize) -> Result<(), String> {
    let train = random_points(seed, n, 3, seed % 2 == 0);
    let prediction = random_points(seed ^ 0x5eed, n / 2 + 7, 3, false);
    let k = (n / 3).clamp(2, 10);
    let folds = random_kfold(n, k, seed).map_err(|e| e.to_string())?;
    let labels = folds.labels();
    let err = |e: geovalid::Error| e.to_string();

    for metric in [Metric::Geographic, fit_scaling(&train).map_err(err)?] {
        let t = embed_rows(&train, &metric);
        let q = embed_rows(&prediction, &metric);
        let kind = metric.kind().label();

        let within: Vec<f64> = (0..n).map(|i| brute_min(&t[i], &t, |j| j != i)).collect();
        same_bits(
            &format!("{kind} within"),
            &nnd_within(&train, &metric).map_err(err)?.distances,
            &within,
        )?;

        let between: Vec<f64> = q.iter().map(|r| brute_min(r, &t, |_| true)).collect();
        let got = nnd_between(&prediction, &train, &metric)
            .map_err(err)?
            .distances;
        same_bits(&format!("{kind} between"), &got, &between)?;

        let cv: Vec<f64> = (0..n)
            .map(|i| brute_min(&t[i], &t, |j| labels[j] != labels[i]))
            .collect();
        same_bits(
            &format!("{kind} cv"),
            &nnd_cv(&train, &folds, &metric).map_err(err)?.distances,
            &cv,
        )?;

        if let Metric::Predictor(_) = metric {
            let mut pair_sum = CompensatedSum::new();
            for i in 0..n {
                for j in i + 1..n {
                    pair_sum.add(sq(&t[i], &t[j]).sqrt());
                }
            }
            let d_bar = pair_sum.total() / (n * (n - 1) / 2) as f64;
            let di: Vec<f64> = between.iter().map(|d| d / d_bar).collect();
            same_bits(
                "di",
                &dissimilarity_index(&train, &prediction, None).map_err(err)?,
                &di,
            )?;
            let cv_di: Vec<f64> = cv.iter().map(|d| d / d_bar).collect();
            same_bits(
                "cv_di",
                &cv_dissimilarity(&train, &folds, None).map_err(err)?,
                &cv_di,
            )?;
        }
    }
    Ok(())
}

/// Two random samples of different sizes, some values shared, compared
/// against the counting oracle.
pub fn w1_trial(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let m = r.random_range(1..60);
    let n = r.random_range(1..60);
    let a: Vec<f64> = (0..m)
        .map(|_| (r.random_range(0.0..10.0f64) * 8.0).round() / 8.0)
        .collect();
    let b: Vec<f64> = (0..n).map(|_| r.random_range(0.0..12.0)).collect();
    let got = wasserstein1(&ecdf(&a).unwrap(), &ecdf(&b).unwrap()).w;
    let want = w1_oracle(&a, &b);
    if (got - want).abs() <= W1_TOLERANCE {
        Ok(())
    } else {
        Err(format!("seed {seed}: w = {got}, oracle {want}"))
    }
}

pub const W1_TOLERANCE: f64 = 1e-12;
