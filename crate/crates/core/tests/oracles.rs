mod common;

use common::*;
use geovalid::evaluation::masked_metrics;
use geovalid::geometry::kdtree::KdTree;
use geovalid::geometry::{fit_scaling, Embedding};
use geovalid::learner::TreeNode;
use geovalid::resampling::SplitStrategy;
use geovalid::simulation::{generate_world, sample_design, Design, DesignSpec, WorldSpec};
use geovalid::{
    block_kfold, cross_validate, cv_dissimilarity, design_based_estimate, distributions, ecdf, fit,
    metrics, nnd_between, nnd_cv, nnd_within, random_kfold, split_train_test, true_error,
    wasserstein1, FoldAssignment, LearnerSpec, Metric, PointSet, Strategy,
};
use rand::Rng;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn coords_only(coords: Vec<[f64; 2]>) -> PointSet {
    PointSet::new(
        (0..coords.len() as i64).collect(),
        coords,
        vec![],
        vec![],
        None,
    )
    .unwrap()
}

#[test]
fn distance_functions_match_exhaustive_search() {
    for (i, n) in [2, 3, 4, 7, 12, 25, 40, 64, 99, 150, 211, 300]
        .into_iter()
        .enumerate()
    {
        check_distance_oracles(100 + i as u64, n).unwrap();
    }
}

#[test]
fn kdtree_nearest_matches_exhaustive_search() {
    let mut r = rng(8);
    let data: Vec<f64> = (0..1000).map(|_| r.random_range(0.0..1.0)).collect();
    let rows: Vec<Vec<f64>> = data.chunks(2).map(|c| c.to_vec()).collect();
    let tree = KdTree::new(Embedding::new(2, data));
    for _ in 0..100 {
        let q = [r.random_range(-0.1..1.1), r.random_range(-0.1..1.1)];
        let (idx, d2) = tree.nearest(&q, None).unwrap();
        let want = brute_min(&q, &rows, |_| true);
        assert_eq!(d2.sqrt().to_bits(), want.to_bits());
        assert_eq!(sq(&q, &rows[idx]).to_bits(), d2.to_bits());
    }
}

#[test]
fn grid_to_training_distances_match_exhaustive_search() {
    let grid = coords_only(
        (0..1000)
            .map(|c| [(c % 40) as f64 + 0.5, (c / 40) as f64 + 0.5])
            .collect(),
    );
    let train = random_points(3, 50, 2, true);
    let t = geo_rows(&train);
    let want: Vec<f64> = geo_rows(&grid)
        .iter()
        .map(|q| brute_min(q, &t, |_| true))
        .collect();
    let got = nnd_between(&grid, &train, &Metric::Geographic)
        .unwrap()
        .distances;
    assert_eq!(got, want);
}

#[test]
fn scaled_training_columns_are_standardised() {
    let train = random_points(21, 10, 5, false);
    let metric = fit_scaling(&train).unwrap();
    let rows = embed_rows(&train, &metric);
    for j in 0..5 {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let m = mean(&col);
        let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 9.0).sqrt();
        assert!(m.abs() < 1e-12, "column {j} mean {m}");
        assert!((sd - 1.0).abs() < 1e-12, "column {j} sd {sd}");
    }
}

#[test]
fn ecdf_of_uniforms_is_close_to_identity() {
    let mut r = rng(4);
    let v: Vec<f64> = (0..1000).map(|_| r.random_range(0.0..1.0)).collect();
    let e = ecdf(&v).unwrap();
    for d in 1..10 {
        let x = d as f64 / 10.0;
        let count = v.iter().filter(|&&u| u <= x).count() as f64 / 1000.0;
        assert_eq!(e.cdf(x), count);
        assert!((e.cdf(x) - x).abs() < 0.05);
    }
}

#[test]
fn wasserstein_matches_integration_oracle() {
    for seed in 0..300 {
        w1_trial(seed).unwrap();
    }
}

fn twenty_points() -> (PointSet, PointSet) {
    let train = coords_only(vec![
        [0.0, 0.0],
        [1.0, 0.5],
        [2.5, 0.0],
        [0.5, 2.0],
        [3.0, 3.0],
        [7.0, 1.0],
        [7.5, 2.5],
        [9.0, 0.5],
        [4.0, 8.0],
        [5.0, 9.5],
    ]);
    let prediction = coords_only(vec![
        [0.0, 0.0],
        [5.0, 5.0],
        [10.0, 10.0],
        [2.0, 7.0],
        [8.0, 5.0],
        [6.0, 0.0],
        [1.5, 1.5],
        [9.5, 9.0],
        [3.5, 4.5],
        [0.0, 10.0],
    ]);
    (train, prediction)
}

#[test]
fn extrapolation_index_on_fixed_instance() {
    let (train, prediction) = twenty_points();
    let t = geo_rows(&train);
    let within: Vec<f64> = (0..t.len())
        .map(|i| brute_min(&t[i], &t, |j| j != i))
        .collect();
    let between: Vec<f64> = geo_rows(&prediction)
        .iter()
        .map(|q| brute_min(q, &t, |_| true))
        .collect();
    let want = w1_oracle(&within, &between);
    let got = distributions::extrapolation_index(&train, &prediction, &Metric::Geographic).unwrap();
    assert!((got.w - want).abs() < 1e-12, "{} vs {want}", got.w);
    assert_eq!((got.n_first, got.n_second), (10, 10));
}

#[test]
fn cv_match_index_on_fixed_instance() {
    let train = random_points(50, 50, 2, true);
    let prediction = coords_only(
        (0..400)
            .map(|c| [(c % 20) as f64 * 5.0, (c / 20) as f64 * 5.0])
            .collect(),
    );
    let labels: Vec<usize> = (0..50).map(|i| (i * 7) % 5).collect();
    let folds = FoldAssignment::from_labels(labels.clone(), 5, Strategy::Random).unwrap();
    let t = geo_rows(&train);
    let cv: Vec<f64> = (0..50)
        .map(|i| brute_min(&t[i], &t, |j| labels[j] != labels[i]))
        .collect();
    let target: Vec<f64> = geo_rows(&prediction)
        .iter()
        .map(|q| brute_min(q, &t, |_| true))
        .collect();
    let want = w1_oracle(&cv, &target);
    let got =
        distributions::cv_match_index(&train, &folds, &prediction, &Metric::Geographic).unwrap();
    assert!((got.w - want).abs() < 1e-12, "{} vs {want}", got.w);
}

#[test]
fn metrics_match_direct_formula() {
    let mut r = rng(12);
    let obs: Vec<f64> = (0..100).map(|_| r.random_range(-5.0..5.0)).collect();
    let pred: Vec<f64> = obs.iter().map(|o| o + r.random_range(-2.0..2.0)).collect();
    let m = metrics(&pred, &obs).unwrap();
    let n = 100.0;
    let sse: f64 = pred.iter().zip(&obs).map(|(p, o)| (p - o) * (p - o)).sum();
    let sae: f64 = pred.iter().zip(&obs).map(|(p, o)| (p - o).abs()).sum();
    let mo = mean(&obs);
    let sst: f64 = obs.iter().map(|o| (o - mo) * (o - mo)).sum();
    assert!((m.rmse - (sse / n).sqrt()).abs() < 1e-12);
    assert!((m.mae - sae / n).abs() < 1e-12);
    assert!((m.r2.unwrap() - (1.0 - sse / sst)).abs() < 1e-12);
    assert_eq!(m.n_eval, 100);

    let one = masked_metrics(&pred, &obs, &(0..100).map(|i| i == 17).collect::<Vec<_>>()).unwrap();
    assert_eq!(one.rmse, (pred[17] - obs[17]).abs());
    assert_eq!(one.n_eval, 1);
}

#[test]
fn cross_validation_matches_manual_loop() {
    let train = random_points(31, 100, 4, true);
    let folds = random_kfold(100, 5, 9).unwrap();
    let spec = LearnerSpec {
        n_trees: 25,
        seed: 5,
        ..Default::default()
    };
    let cv = cross_validate(&train, &folds, &spec).unwrap();

    let mut preds = vec![f64::NAN; 100];
    for f in 0..5 {
        let held: Vec<usize> = (0..100).filter(|&i| folds.labels()[i] == f).collect();
        let rest: Vec<usize> = (0..100).filter(|&i| folds.labels()[i] != f).collect();
        let model = fit(&spec, &train.subset(&rest)).unwrap();
        for (i, p) in held
            .iter()
            .zip(model.predict(&train.subset(&held)).unwrap())
        {
            preds[*i] = p;
        }
    }
    assert_eq!(cv.predictions, preds);
    assert_eq!(
        cv.pooled,
        metrics(&preds, train.response().unwrap()).unwrap()
    );
}

/// Depth-one tree traced by hand: every midpoint of every feature is tried,
/// the split minimising the within-child sum of squares wins, and the first
/// one found (lowest feature, lowest threshold) is kept on ties.
fn traced_stump(x: &[[f64; 2]], y: &[f64], in_bag: &[u32]) -> (Option<(usize, f64)>, f64, f64) {
    let rows: Vec<usize> = (0..y.len())
        .flat_map(|i| std::iter::repeat_n(i, in_bag[i] as usize))
        .collect();
    let mean_of = |rs: &[usize]| rs.iter().map(|&i| y[i]).sum::<f64>() / rs.len() as f64;
    let sse = |rs: &[usize]| {
        let m = mean_of(rs);
        rs.iter().map(|&i| (y[i] - m) * (y[i] - m)).sum::<f64>()
    };
    let root = mean_of(&rows);
    if rows.iter().all(|&i| y[i] == y[rows[0]]) {
        return (None, root, root);
    }
    let mut best: Option<(usize, f64, f64, f64, f64)> = None;
    for f in 0..2 {
        let mut values: Vec<f64> = rows.iter().map(|&i| x[i][f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][f] <= t);
            let s = sse(&l) + sse(&r);
            if best.is_none_or(|b| s < b.2) {
                best = Some((f, t, s, mean_of(&l), mean_of(&r)));
            }
        }
    }
    let (f, t, _, l, r) = best.unwrap();
    (Some((f, t)), l, r)
}

#[test]
fn forest_matches_hand_traced_stumps() {
    let x = [
        [1.0, 6.0],
        [2.0, 1.0],
        [3.0, 5.0],
        [4.0, 2.0],
        [5.0, 4.0],
        [6.0, 3.0],
    ];
    let y = [1.0, 1.5, 2.5, 10.0, 11.0, 13.0];
    let train = PointSet::new(
        (0..6).collect(),
        x.iter().map(|r| [r[0] * 10.0, r[1] * 10.0]).collect(),
        vec!["a".into(), "b".into()],
        x.iter().flatten().copied().collect(),
        Some(y.to_vec()),
    )
    .unwrap();
    let spec = LearnerSpec {
        n_trees: 3,
        mtry: Some(2),
        min_node_size: 1,
        max_depth: Some(1),
        seed: 7,
        ..Default::default()
    };
    let model = fit(&spec, &train).unwrap();
    assert_eq!(model.trees().len(), 3);

    let mut stumps = Vec::new();
    for tree in model.trees() {
        let traced = traced_stump(&x, &y, tree.in_bag());
        match (traced.0, tree.nodes()) {
            (None, [TreeNode::Leaf(v)]) => assert!((v - traced.1).abs() < 1e-12),
            (
                Some((f, t)),
                [TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                }, ..],
            ) => {
                assert_eq!((*feature, *threshold), (f, t));
                let leaf = |i: usize| match tree.nodes()[i] {
                    TreeNode::Leaf(v) => v,
                    _ => panic!("depth limit exceeded"),
                };
                assert!((leaf(*left) - traced.1).abs() < 1e-12);
                assert!((leaf(*right) - traced.2).abs() < 1e-12);
            }
            (t, n) => panic!("traced {t:?}, fitted {n:?}"),
        }
        stumps.push(traced);
    }

    let queries: Vec<[f64; 2]> = vec![
        [0.0, 0.0],
        [2.5, 3.5],
        [3.5, 2.5],
        [7.0, 7.0],
        [4.0, 6.0],
        [1.0, 1.0],
    ];
    let qset = PointSet::new(
        (0..6).collect(),
        vec![[0.0, 0.0]; 6],
        vec!["a".into(), "b".into()],
        queries.iter().flatten().copied().collect(),
        None,
    )
    .unwrap();
    let got = model.predict(&qset).unwrap();
    for (q, g) in queries.iter().zip(got) {
        let want = stumps
            .iter()
            .map(|(split, l, r)| match split {
                Some((f, t)) if q[*f] > *t => *r,
                _ => *l,
            })
            .sum::<f64>()
            / 3.0;
        assert!(
            (g - want.clamp(1.0, 13.0)).abs() < 1e-12,
            "{q:?}: {g} vs {want}"
        );
    }
}

#[test]
fn forest_fits_a_single_predictor_response() {
    let mut r = rng(2);
    let n = 500;
    let predictors: Vec<f64> = (0..2 * n).map(|_| r.random_range(0.0..1.0)).collect();
    let y: Vec<f64> = predictors.chunks(2).map(|c| c[1]).collect();
    let train = PointSet::new(
        (0..n as i64).collect(),
        vec![[0.0, 0.0]; n],
        vec!["x0".into(), "x1".into()],
        predictors,
        Some(y.clone()),
    )
    .unwrap();
    let model = fit(&LearnerSpec::default(), &train).unwrap();
    let rmse = metrics(&model.predict(&train).unwrap(), &y).unwrap().rmse;
    let m = mean(&y);
    let sd = (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!(rmse < sd / 2.0, "{rmse} vs sd {sd}");
}

#[test]
fn census_estimate_equals_true_error() {
    let world = generate_world(&WorldSpec {
        nx: 20,
        ny: 20,
        p: 3,
        corr_length: 2,
        ..Default::default()
    })
    .unwrap();
    let train = world.grid.subset(&(0..400).step_by(9).collect::<Vec<_>>());
    let model = fit(
        &LearnerSpec {
            n_trees: 10,
            ..Default::default()
        },
        &train,
    )
    .unwrap();
    let rest: Vec<usize> = (0..400).filter(|c| c % 9 != 0).collect();
    let domain = world.grid.subset(&rest);
    assert_eq!(
        design_based_estimate(&model, &domain).unwrap(),
        true_error(&model, &domain, None).unwrap()
    );
}

#[test]
fn block_folds_hold_out_farther_points_than_random_folds() {
    let points = random_points(77, 200, 2, true);
    let block = block_kfold(&points, 6.0, 4, 1).unwrap();
    let random = random_kfold(200, 4, 1).unwrap();
    let d = |f: &FoldAssignment| mean(&nnd_cv(&points, f, &Metric::Geographic).unwrap().distances);
    assert!(d(&block) > d(&random), "{} vs {}", d(&block), d(&random));

    let cv_di = |f: &FoldAssignment| mean(&cv_dissimilarity(&points, f, None).unwrap());
    assert!(cv_di(&block) > cv_di(&random));
}

#[test]
fn knndm_split_matches_prediction_distances_better_than_random() {
    let world = generate_world(&WorldSpec {
        nx: 50,
        ny: 50,
        p: 2,
        corr_length: 3,
        ..Default::default()
    })
    .unwrap();
    let mut knndm_w = Vec::new();
    let mut random_w = Vec::new();
    for seed in 0..20 {
        let sample = sample_design(
            &world,
            &DesignSpec {
                seed,
                ..DesignSpec::new(
                    Design::Clustered {
                        parents: 5,
                        child_sd: 2.0,
                    },
                    60,
                )
            },
        )
        .unwrap();
        let target = nnd_between(&sample.domain, &sample.train, &Metric::Geographic).unwrap();
        let target = ecdf(&target.distances).unwrap();
        let w_of = |(train, test): (Vec<usize>, Vec<usize>)| {
            let d = nnd_between(
                &sample.train.subset(&test),
                &sample.train.subset(&train),
                &Metric::Geographic,
            )
            .unwrap()
            .distances;
            wasserstein1(&ecdf(&d).unwrap(), &target).w
        };
        let strategy = SplitStrategy::Knndm {
            prediction: &sample.domain,
            metric: &Metric::Geographic,
            options: Default::default(),
        };
        knndm_w.push(w_of(
            split_train_test(&sample.train, &strategy, seed).unwrap(),
        ));
        random_w.push(w_of(
            split_train_test(&sample.train, &SplitStrategy::Random, seed).unwrap(),
        ));
    }
    assert!(
        mean(&knndm_w) < mean(&random_w),
        "{} vs {}",
        mean(&knndm_w),
        mean(&random_w)
    );
}

#[test]
fn short_correlation_length_gives_weak_lag_five_autocorrelation() {
    let world = generate_world(&WorldSpec {
        nx: 60,
        ny: 60,
        p: 2,
        corr_length: 1,
        trend: 0.0,
        ..Default::default()
    })
    .unwrap();
    let f = world.grid.column(0);
    let m = mean(&f);
    let var = f.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / f.len() as f64;
    let mut cov = Vec::new();
    for iy in 0..60 {
        for ix in 0..55 {
            cov.push((f[world.cell(ix, iy)] - m) * (f[world.cell(ix + 5, iy)] - m));
        }
    }
    let rho = mean(&cov) / var;
    assert!(rho.abs() < 0.2, "lag-5 autocorrelation {rho}");
}

#[test]
fn unit_square_and_collinear_examples() {
    let square = coords_only(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
    assert_eq!(
        nnd_within(&square, &Metric::Geographic).unwrap().distances,
        vec![1.0; 4]
    );
    let reference = coords_only(vec![[0.0, 0.0], [1.0, 0.0]]);
    let query = coords_only(vec![[3.0, 0.0]]);
    assert_eq!(
        nnd_between(&query, &reference, &Metric::Geographic)
            .unwrap()
            .distances,
        vec![2.0]
    );
}
