//! Synthetic worlds, the four training designs, and the repeated
//! experiment comparing estimated with true map error.

mod design;
mod world;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use design::{sample_design, Design, DesignSpec, Sample};
pub use world::{generate_world, ResponseRecipe, World, WorldSpec};

use crate::aoa::{aoa_mask_with, AoaOptions, DissimilarityModel};
use crate::distributions::{cv_match_index, extrapolation_index};
use crate::error::{Error, Result};
use crate::evaluation::{
    cross_validate, design_based_estimate, masked_metrics, metrics, write_reports_csv,
    EvalStrategy, EvaluationReport,
};
use crate::geometry::Metric;
use crate::learner::{fit, LearnerSpec};
use crate::numeric::derive_seed;
use crate::resampling::{
    block_kfold, knndm_folds, random_kfold, FoldAssignment, FoldReport, KnndmOptions,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub world: WorldSpec,
    pub designs: Vec<DesignSpec>,
    pub learner: LearnerSpec,
    pub k: usize,
    pub strategies: Vec<EvalStrategy>,
    pub repetitions: usize,
    /// Size of the simple random test sample for design-based evaluation.
    pub test_size: usize,
    /// Side length of the square blocks for block cross-validation.
    pub block_size: f64,
    pub knndm: KnndmOptions,
    pub aoa: AoaOptions,
    pub master_seed: u64,
    pub output: Option<PathBuf>,
    /// Worker threads; `None` uses every available core.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let n = 150;
        Self {
            world: WorldSpec::default(),
            designs: vec![
                DesignSpec::new(Design::Random, n),
                DesignSpec::new(Design::biased(), n),
                DesignSpec::new(Design::clustered(), n),
                DesignSpec::new(Design::extrapolation(), n),
            ],
            learner: LearnerSpec::default(),
            k: 10,
            strategies: EvalStrategy::ALL.to_vec(),
            repetitions: 25,
            test_size: 500,
            block_size: 18.0,
            knndm: KnndmOptions::default(),
            aoa: AoaOptions::default(),
            master_seed: 42,
            output: None,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        self.world.validate()?;
        if self.repetitions < 1 {
            return bad("repetitions must be at least 1".into());
        }
        if self.strategies.is_empty() {
            return bad("no evaluation strategies configured".into());
        }
        if self.designs.is_empty() {
            return bad("no sampling designs configured".into());
        }
        if self.k < 2 {
            return bad(format!("k = {}; at least 2 folds required", self.k));
        }
        if let Some(d) = self.designs.iter().find(|d| d.n < 2 * self.k) {
            return bad(format!(
                "{} design has n = {} < 2k = {}",
                d.design,
                d.n,
                2 * self.k
            ));
        }
        if self.strategies.contains(&EvalStrategy::DesignBased) && self.test_size < 1 {
            return bad("test_size must be at least 1 for design-based evaluation".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }
}

/// Seeds behind one report row; everything needed to regenerate its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowSeeds {
    pub design: u64,
    pub learner: u64,
    pub evaluation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDiagnostics {
    pub repetition: usize,
    pub design: DesignSpec,
    pub strategy: EvalStrategy,
    pub seeds: RowSeeds,
    pub folds: Option<FoldReport>,
    pub aoa_inside: Option<usize>,
    pub aoa_cells: Option<usize>,
    pub aoa_mean_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub repetition: usize,
    pub design: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub reports: Vec<EvaluationReport>,
    pub diagnostics: Vec<RowDiagnostics>,
    pub failures: Vec<Failure>,
    pub expected_rows: usize,
}

impl ExperimentOutput {
    pub fn shortfall(&self) -> usize {
        self.expected_rows - self.reports.len()
    }
}

/// Runs every (repetition, design) pair as an independent task. Rows come
/// out in (repetition, design, strategy) order whatever the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| run_tasks(config)),
        None => run_tasks(config),
    }
}

fn run_tasks(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let world = generate_world(&config.world)?;
    let tasks: Vec<(usize, usize)> = (0..config.repetitions)
        .flat_map(|r| (0..config.designs.len()).map(move |d| (r, d)))
        .collect();
    let results: Vec<Result<Vec<(EvaluationReport, RowDiagnostics)>>> = tasks
        .par_iter()
        .map(|&(r, d)| run_one(config, &world, r, d))
        .collect();

    let mut out = ExperimentOutput {
        reports: Vec::new(),
        diagnostics: Vec::new(),
        failures: Vec::new(),
        expected_rows: tasks.len() * config.strategies.len(),
    };
    for (&(r, d), res) in tasks.iter().zip(results) {
        match res {
            Ok(rows) => {
                for (rep, diag) in rows {
                    out.reports.push(rep);
                    out.diagnostics.push(diag);
                }
            }
            Err(e) => {
                let design = config.designs[d].design.label().to_string();
                log::warn!("repetition {r}, {design} design aborted: {e}");
                out.failures.push(Failure {
                    repetition: r,
                    design,
                    reason: e.to_string(),
                });
            }
        }
    }
    if out.shortfall() > 0 {
        log::warn!(
            "{} of {} report rows missing",
            out.shortfall(),
            out.expected_rows
        );
    }
    Ok(out)
}

fn run_one(
    config: &ExperimentConfig,
    world: &World,
    r: usize,
    d: usize,
) -> Result<Vec<(EvaluationReport, RowDiagnostics)>> {
    let seed = derive_seed(config.master_seed, &[r as u64, d as u64]);
    let seeds = RowSeeds {
        design: derive_seed(seed, &[0]),
        learner: derive_seed(seed, &[1]),
        evaluation: derive_seed(seed, &[2]),
    };
    let design = DesignSpec {
        seed: seeds.design,
        ..config.designs[d]
    };
    let sample = sample_design(world, &design)?;
    let learner = config.learner.clone().with_seed(seeds.learner);
    let model = fit(&learner, &sample.train)?;
    let truth = sample.domain.require_response()?;
    let pred = model.predict(&sample.domain)?;
    let true_whole = metrics(&pred, truth)?;
    let geo = Metric::Geographic;
    let extrapolation_w = extrapolation_index(&sample.train, &sample.domain, &geo)?.w;
    let dissimilarity = DissimilarityModel::fit(
        &sample.train,
        config.aoa.weights.as_deref(),
        config.aoa.normalisation,
    )?;
    let di = dissimilarity.di(&sample.domain)?;

    let mut rows = Vec::with_capacity(config.strategies.len());
    for &strategy in &config.strategies {
        let eval_seed = derive_seed(seeds.evaluation, &[strategy as u64]);
        let row_seeds = RowSeeds {
            evaluation: eval_seed,
            ..seeds
        };
        let base = EvaluationReport {
            repetition: r,
            design: design.design.label().to_string(),
            strategy,
            seed,
            n_train: sample.train.len(),
            k: None,
            estimated: true_whole,
            true_whole_area: Some(true_whole),
            true_within_aoa: None,
            aoa_threshold: None,
            extrapolation_index: Some(extrapolation_w),
            cv_match_index: None,
        };
        let diag = RowDiagnostics {
            repetition: r,
            design,
            strategy,
            seeds: row_seeds,
            folds: None,
            aoa_inside: None,
            aoa_cells: None,
            aoa_mean_distance: None,
        };
        let row = if strategy == EvalStrategy::DesignBased {
            let test = srs_test_sample(&sample, config.test_size, eval_seed)?;
            let estimated = design_based_estimate(&model, &test)?;
            (EvaluationReport { estimated, ..base }, diag)
        } else {
            let folds = make_folds(config, strategy, &sample, eval_seed)?;
            let cv = cross_validate(&sample.train, &folds, &learner)?;
            let aoa = aoa_mask_with(&di, &dissimilarity.cv_di(&folds)?, config.aoa.rule)?;
            let within = match masked_metrics(&pred, truth, &aoa.inside) {
                Ok(m) => Some(m),
                Err(Error::EmptyAoa) => {
                    log::warn!(
                        "repetition {r}, {}: AOA empty under {strategy} folds",
                        design.design
                    );
                    None
                }
                Err(e) => return Err(e),
            };
            let cv_w = cv_match_index(&sample.train, &folds, &sample.domain, &geo)?.w;
            (
                EvaluationReport {
                    k: Some(config.k),
                    estimated: cv.pooled,
                    true_within_aoa: within,
                    aoa_threshold: Some(aoa.threshold),
                    cv_match_index: Some(cv_w),
                    ..base
                },
                RowDiagnostics {
                    folds: Some(folds.report()),
                    aoa_inside: Some(aoa.inside_count()),
                    aoa_cells: Some(aoa.inside.len()),
                    aoa_mean_distance: Some(dissimilarity.mean_distance()),
                    ..diag
                },
            )
        };
        rows.push(row);
    }
    Ok(rows)
}

fn make_folds(
    config: &ExperimentConfig,
    strategy: EvalStrategy,
    sample: &Sample,
    seed: u64,
) -> Result<FoldAssignment> {
    let train = &sample.train;
    match strategy {
        EvalStrategy::RandomCv => random_kfold(train.len(), config.k, seed),
        EvalStrategy::BlockCv => block_kfold(train, config.block_size, config.k, seed),
        EvalStrategy::KnndmCv => knndm_folds(
            train,
            &sample.domain,
            config.k,
            &Metric::Geographic,
            &config.knndm,
            seed,
        ),
        EvalStrategy::DesignBased => unreachable!("design-based evaluation has no folds"),
    }
}

/// Simple random sample without replacement from the prediction domain,
/// excluding cells used for training.
fn srs_test_sample(sample: &Sample, size: usize, seed: u64) -> Result<crate::geometry::PointSet> {
    let train: std::collections::HashSet<usize> = sample.train_cells.iter().copied().collect();
    let candidates: Vec<usize> = (0..sample.domain.len())
        .filter(|&i| !train.contains(&sample.domain_cells[i]))
        .collect();
    if size > candidates.len() {
        return Err(Error::TooFewPoints {
            needed: size,
            got: candidates.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked: Vec<usize> = index::sample(&mut rng, candidates.len(), size)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    Ok(sample.domain.subset(&picked))
}

#[derive(Serialize)]
struct DiagnosticsFile<'a> {
    config: &'a ExperimentConfig,
    expected_rows: usize,
    shortfall: usize,
    failures: &'a [Failure],
    rows: &'a [RowDiagnostics],
}

pub const REPORTS_FILE: &str = "reports.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";

/// Writes `reports.csv` and `diagnostics.json` into `dir`, creating it if
/// needed. Diagnostics rows align one-to-one with report rows.
pub fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    output: &ExperimentOutput,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_reports_csv(
        &output.reports,
        BufWriter::new(File::create(dir.join(REPORTS_FILE))?),
    )?;
    let diag = DiagnosticsFile {
        config,
        expected_rows: output.expected_rows,
        shortfall: output.shortfall(),
        failures: &output.failures,
        rows: &output.diagnostics,
    };
    serde_json::to_writer_pretty(
        BufWriter::new(File::create(dir.join(DIAGNOSTICS_FILE))?),
        &diag,
    )?;
    Ok(())
}
