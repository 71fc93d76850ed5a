use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use geovalid::aoa::{aoa_mask_with, DissimilarityModel, Normalisation, ThresholdRule};
use geovalid::distributions::{
    cv_match_index, ecdf, extrapolation_index, wasserstein1, WassersteinReport,
};
use geovalid::evaluation::{
    cross_validate, design_based_estimate, masked_metrics, metrics, write_reports_csv,
    EvalStrategy, EvaluationReport,
};
use geovalid::geometry::io::read_point_set;
use geovalid::learner::{fit, LearnerSpec};
use geovalid::numeric::{quantile_sorted, sort_floats};
use geovalid::resampling::{
    block_kfold, knndm_folds, random_kfold, FoldReport, KnndmCandidate, KnndmOptions,
};
use geovalid::simulation::{
    run_experiment, write_outputs, ExperimentConfig, DIAGNOSTICS_FILE, REPORTS_FILE,
};
use geovalid::{Error, FoldAssignment, Metric, MetricKind, PointSet};

use crate::output;
use crate::{
    usage, AoaArgs, EvaluateArgs, FoldArgs, FoldOpts, MetricArg, NndArgs, SimulateArgs,
    StrategyArg, WassersteinArgs,
};

fn read(path: &Path) -> Result<PointSet> {
    read_point_set(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_weights(text: Option<&str>) -> Result<Option<Vec<f64>>> {
    text.map(|t| {
        t.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| usage(format!("--weights: '{v}' is not a number")))
            })
            .collect()
    })
    .transpose()
}

/// Flag combinations that can be rejected before touching any file.
fn check_fold_opts(opts: &FoldOpts, has_predict: bool) -> Result<()> {
    match opts.strategy {
        Some(StrategyArg::Block) if opts.block_size.is_none() => {
            Err(usage("--strategy block requires --block-size"))
        }
        Some(StrategyArg::Knndm) if !has_predict => {
            Err(usage("--strategy knndm requires --predict"))
        }
        _ => Ok(()),
    }
}

fn check_metric(metric: MetricArg, weights: &Option<Vec<f64>>) -> Result<()> {
    if metric == MetricArg::Geo && weights.is_some() {
        return Err(usage("--weights only apply with --metric predictor"));
    }
    Ok(())
}

fn build_metric(metric: MetricArg, weights: Option<&[f64]>, train: &PointSet) -> Result<Metric> {
    Ok(match metric {
        MetricArg::Geo => Metric::Geographic,
        MetricArg::Predictor => {
            let m = Metric::for_training(MetricKind::PredictorEuclidean, train)?;
            match weights {
                Some(w) => m.with_weights(train, w)?,
                None => m,
            }
        }
    })
}

fn make_folds(
    opts: &FoldOpts,
    train: &PointSet,
    predict: Option<&PointSet>,
    metric: &Metric,
) -> Result<FoldAssignment> {
    let strategy = opts
        .strategy
        .ok_or_else(|| usage("--strategy is required"))?;
    Ok(match strategy {
        StrategyArg::Random => random_kfold(train.len(), opts.k, opts.seed)?,
        StrategyArg::Block => {
            block_kfold(train, opts.block_size.expect("checked"), opts.k, opts.seed)?
        }
        StrategyArg::Knndm => {
            let options = KnndmOptions {
                q_max: opts.q_max,
                ..Default::default()
            };
            knndm_folds(
                train,
                predict.expect("checked"),
                opts.k,
                metric,
                &options,
                opts.seed,
            )?
        }
    })
}

pub fn nnd(args: NndArgs) -> Result<()> {
    let weights = parse_weights(args.weights.as_deref())?;
    check_metric(args.metric, &weights)?;
    check_fold_opts(&args.folds, args.predict.is_some())?;
    let train = read(&args.train)?;
    let predict = args.predict.as_deref().map(read).transpose()?;
    let metric = build_metric(args.metric, weights.as_deref(), &train)?;

    let mut samples = vec![geovalid::nnd_within(&train, &metric)?];
    if let Some(p) = &predict {
        samples.push(geovalid::nnd_between(p, &train, &metric)?);
    }
    if args.folds.strategy.is_some() {
        let folds = make_folds(&args.folds, &train, predict.as_ref(), &metric)?;
        samples.push(geovalid::nnd_cv(&train, &folds, &metric)?);
    }
    let mut w = output::csv_writer(args.out.as_deref())?;
    w.write_record(["role", "metric", "distance"])?;
    for s in &samples {
        for d in &s.distances {
            w.write_record([s.role.label(), s.metric.label(), &d.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Values from a one-column file, or from its `distance` column. A header
/// row is recognised by failing to parse as a number.
fn read_values(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut column = None;
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let col = match column {
            Some(c) => c,
            None => {
                if record.len() == 1 && record[0].trim().parse::<f64>().is_ok() {
                    column = Some(0);
                    0
                } else {
                    let c = if record.len() == 1 {
                        0
                    } else {
                        record
                            .iter()
                            .position(|h| h.trim() == "distance")
                            .with_context(|| {
                                format!(
                                    "{}: several columns but none named 'distance'",
                                    path.display()
                                )
                            })?
                    };
                    column = Some(c);
                    continue;
                }
            }
        };
        let v: f64 = record
            .get(col)
            .unwrap_or("")
            .trim()
            .parse()
            .with_context(|| format!("{}:{}: not a number", path.display(), line + 1))?;
        if !v.is_finite() {
            bail!("{}:{}: non-finite value", path.display(), line + 1);
        }
        values.push(v);
    }
    Ok(values)
}

pub fn wasserstein(args: WassersteinArgs) -> Result<()> {
    let weights = parse_weights(args.weights.as_deref())?;
    check_metric(args.metric, &weights)?;
    let mut rows: Vec<(&str, WassersteinReport)> = Vec::new();
    match (&args.a, &args.b, &args.train, &args.predict) {
        (Some(a), Some(b), None, None) => {
            let report = wasserstein1(&ecdf(&read_values(a)?)?, &ecdf(&read_values(b)?)?);
            rows.push(("samples", report));
        }
        (None, None, Some(t), Some(p)) => {
            check_fold_opts(&args.folds, true)?;
            let train = read(t)?;
            let predict = read(p)?;
            let metric = build_metric(args.metric, weights.as_deref(), &train)?;
            rows.push((
                "extrapolation",
                extrapolation_index(&train, &predict, &metric)?,
            ));
            if args.folds.strategy.is_some() {
                let folds = make_folds(&args.folds, &train, Some(&predict), &metric)?;
                rows.push((
                    "cv-match",
                    cv_match_index(&train, &folds, &predict, &metric)?,
                ));
            }
        }
        _ => return Err(usage("give either --a and --b, or --train and --predict")),
    }
    let mut w = output::csv_writer(args.out.as_deref())?;
    w.write_record(["index", "w", "n_first", "n_second", "metric"])?;
    for (name, r) in rows {
        w.write_record([
            name.to_string(),
            r.w.to_string(),
            r.n_first.to_string(),
            r.n_second.to_string(),
            r.metric.map(|m| m.label().to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FoldSidecar<'a> {
    #[serde(flatten)]
    report: FoldReport,
    audit: &'a [KnndmCandidate],
}

pub fn folds(args: FoldArgs) -> Result<()> {
    let weights = parse_weights(args.weights.as_deref())?;
    check_metric(args.metric, &weights)?;
    if args.folds.strategy.is_none() {
        return Err(usage("--strategy is required"));
    }
    check_fold_opts(&args.folds, args.predict.is_some())?;
    let train = read(&args.train)?;
    let predict = args.predict.as_deref().map(read).transpose()?;
    let metric = build_metric(args.metric, weights.as_deref(), &train)?;
    let folds = make_folds(&args.folds, &train, predict.as_ref(), &metric)?;

    let mut w = output::csv_writer(args.out.as_deref())?;
    w.write_record(["id", "fold"])?;
    for (id, f) in train.ids().iter().zip(folds.labels()) {
        w.write_record([id.to_string(), f.to_string()])?;
    }
    w.flush()?;
    output::sidecar(
        args.out.as_deref(),
        &FoldSidecar {
            report: folds.report(),
            audit: folds.audit(),
        },
    )?;
    Ok(())
}

fn strategy_of(arg: StrategyArg) -> EvalStrategy {
    match arg {
        StrategyArg::Random => EvalStrategy::RandomCv,
        StrategyArg::Block => EvalStrategy::BlockCv,
        StrategyArg::Knndm => EvalStrategy::KnndmCv,
    }
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let weights = parse_weights(args.weights.as_deref())?;
    check_metric(args.metric, &weights)?;
    if args.folds.strategy.is_none() && args.test.is_none() {
        return Err(usage(
            "give --strategy for cross-validation and/or --test for design-based evaluation",
        ));
    }
    check_fold_opts(&args.folds, args.predict.is_some() || args.truth.is_some())?;
    let spec = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<LearnerSpec>(&text)
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => LearnerSpec::default().with_seed(args.folds.seed),
    };
    let train = read(&args.train)?;
    train.require_response()?;
    let truth = args.truth.as_deref().map(read).transpose()?;
    let domain = match (&args.predict, &truth) {
        (Some(p), _) => Some(read(p)?),
        (None, Some(t)) => Some(t.clone()),
        (None, None) => None,
    };
    let metric = build_metric(args.metric, weights.as_deref(), &train)?;
    let model = fit(&spec, &train)?;

    let truth_eval = match &truth {
        Some(t) => {
            let obs = t.require_response()?.to_vec();
            let pred = model.predict(t)?;
            let whole = metrics(&pred, &obs)?;
            Some((pred, obs, whole))
        }
        None => None,
    };
    let extrapolation_w = domain
        .as_ref()
        .map(|d| extrapolation_index(&train, d, &metric).map(|r| r.w))
        .transpose()?;
    let row = |strategy, estimated| EvaluationReport {
        repetition: 0,
        design: "observed".into(),
        strategy,
        seed: args.folds.seed,
        n_train: train.len(),
        k: None,
        estimated,
        true_whole_area: truth_eval.as_ref().map(|t| t.2),
        true_within_aoa: None,
        aoa_threshold: None,
        extrapolation_index: extrapolation_w,
        cv_match_index: None,
    };

    let mut reports = Vec::new();
    if let Some(test) = &args.test {
        let test = read(test)?;
        reports.push(row(
            EvalStrategy::DesignBased,
            design_based_estimate(&model, &test)?,
        ));
    }
    if let Some(strategy) = args.folds.strategy {
        let folds = make_folds(&args.folds, &train, domain.as_ref(), &metric)?;
        let cv = cross_validate(&train, &folds, &spec)?;
        let (within, threshold) = match (&truth, &truth_eval) {
            (Some(t), Some((pred, obs, _))) => {
                let dm = DissimilarityModel::fit(&train, None, Normalisation::AllPairs)?;
                let mask =
                    aoa_mask_with(&dm.di(t)?, &dm.cv_di(&folds)?, ThresholdRule::UpperWhisker)?;
                let within = match masked_metrics(pred, obs, &mask.inside) {
                    Ok(m) => Some(m),
                    Err(Error::EmptyAoa) => {
                        log::warn!("AOA is empty; no within-AOA true error");
                        None
                    }
                    Err(e) => return Err(e.into()),
                };
                (within, Some(mask.threshold))
            }
            _ => (None, None),
        };
        reports.push(EvaluationReport {
            k: Some(args.folds.k),
            true_within_aoa: within,
            aoa_threshold: threshold,
            cv_match_index: domain
                .as_ref()
                .map(|d| cv_match_index(&train, &folds, d, &metric).map(|r| r.w))
                .transpose()?,
            ..row(strategy_of(strategy), cv.pooled)
        });
    }
    write_reports_csv(&reports, output::open(args.out.as_deref())?)?;
    Ok(())
}

#[derive(Serialize)]
struct CvDiSummary {
    n: usize,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
}

#[derive(Serialize)]
struct AoaSidecar {
    threshold: f64,
    rule: ThresholdRule,
    normalisation: Normalisation,
    mean_distance: f64,
    inside: usize,
    n_prediction: usize,
    cv_di: CvDiSummary,
    folds: FoldReport,
}

pub fn aoa(args: AoaArgs) -> Result<()> {
    let weights = parse_weights(args.weights.as_deref())?;
    if args.folds.strategy.is_none() {
        return Err(usage("--strategy is required to derive the CV threshold"));
    }
    check_fold_opts(&args.folds, true)?;
    let train = read(&args.train)?;
    let predict = read(&args.predict)?;
    let normalisation = if args.mean_nn {
        Normalisation::MeanNearestNeighbour
    } else {
        Normalisation::AllPairs
    };
    let dm = DissimilarityModel::fit(&train, weights.as_deref(), normalisation)?;
    let folds = make_folds(&args.folds, &train, Some(&predict), &Metric::Geographic)?;
    let result = aoa_mask_with(
        &dm.di(&predict)?,
        &dm.cv_di(&folds)?,
        ThresholdRule::UpperWhisker,
    )?;

    let mut w = output::csv_writer(args.out.as_deref())?;
    w.write_record(["id", "di", "inside"])?;
    for ((id, di), inside) in predict.ids().iter().zip(&result.di).zip(&result.inside) {
        w.write_record([id.to_string(), di.to_string(), inside.to_string()])?;
    }
    w.flush()?;

    let mut sorted = result.cv_di.clone();
    sort_floats(&mut sorted);
    output::sidecar(
        args.out.as_deref(),
        &AoaSidecar {
            threshold: result.threshold,
            rule: result.rule,
            normalisation,
            mean_distance: dm.mean_distance(),
            inside: result.inside_count(),
            n_prediction: result.inside.len(),
            cv_di: CvDiSummary {
                n: sorted.len(),
                min: sorted[0],
                q1: quantile_sorted(&sorted, 0.25),
                median: quantile_sorted(&sorted, 0.5),
                q3: quantile_sorted(&sorted, 0.75),
                max: sorted[sorted.len() - 1],
            },
            folds: folds.report(),
        },
    )?;
    Ok(())
}

pub fn simulate(args: SimulateArgs, threads: Option<usize>) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut config = ExperimentConfig::from_json(&text)
        .with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if threads.is_some() {
        config.threads = threads;
    }
    if let Some(out) = args.out {
        config.output = Some(out);
    }
    let dir = config
        .output
        .clone()
        .ok_or_else(|| usage("no output directory: pass --out or set \"output\" in the config"))?;
    let result = run_experiment(&config)?;
    write_outputs(&dir, &config, &result)?;
    log::info!(
        "{} rows written to {} ({} missing); diagnostics in {}",
        result.reports.len(),
        dir.join(REPORTS_FILE).display(),
        result.shortfall(),
        dir.join(DIAGNOSTICS_FILE).display()
    );
    if result.shortfall() > 0 {
        eprintln!(
            "warning: {} of {} rows missing; see {DIAGNOSTICS_FILE}",
            result.shortfall(),
            result.expected_rows
        );
    }
    Ok(())
}
