//! Configuration-driven experiments producing [`ExperimentReport`]s.
//!
//! Every random draw of repeat `r` comes from a stream derived from
//! `(seed, purpose, r, ...)`, so reports are identical whatever the number
//! of worker threads.

mod config;
mod report;

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

pub use config::{
    DataSettings, ExperimentConfig, ExperimentKind, FileFormat, KpcaSettings, PerceptronSettings, PipelineSettings,
    Preset, RunSettings, StudySettings, UmaSettings,
};
pub use report::{ExperimentReport, ReportRow, Series, CSV_HEADER};

use crate::confusion::{invert_confusion, ConfusionMatrix};
use crate::data::{self, Column, DenseFormat, ImbalancedConfig, SyntheticConfig};
use crate::error::{Error, Result};
use crate::eval::{confusion_rate, count_matrix, error_rate, recall_confusion};
use crate::kpca::{kpca_fit, median_bandwidth};
use crate::model::{Dataset, WeightMatrix};
use crate::noise::{approximation_factor, confusion_at, corrupt_labels, sample_reference, NoiseFamily};
use crate::rng::{self, Rng};
use crate::ultra::train_ultraconservative;
use crate::uma::{train_uma, train_uma_with_observer, SelectionStrategy};

const DATA_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const CORRUPT_STREAM: u64 = 3;
const TRAIN_STREAM: u64 = 4;
const SPLIT_STREAM: u64 = 5;

const MAX_FAMILY_DRAWS: usize = 1000;
const BANDWIDTH_POINTS: usize = 1000;

pub const ERROR_RATE: &str = "error_rate";
pub const CONFUSION_RATE: &str = "confusion_rate";

/// Test-set metrics of a classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub error_rate: f64,
    pub confusion_rate: f64,
}

/// Scores `w` against the ground truth of `test`.
pub fn evaluate(w: &WeightMatrix, test: &Dataset) -> Result<Evaluation> {
    let truth = test.truth_or_err()?;
    let preds = w.predict_all(test.features())?;
    Ok(Evaluation {
        error_rate: error_rate(&preds, truth)?,
        confusion_rate: confusion_rate(&recall_confusion(&preds, truth, test.num_classes())?),
    })
}

/// Column-conditional frequencies of `preds` given `truths`, with `smoothing`
/// added to every count before each column is normalized.
pub fn estimate_confusion(
    preds: &[usize],
    truths: &[usize],
    num_classes: usize,
    smoothing: f64,
) -> Result<DMatrix<f64>> {
    let mut counts = count_matrix(preds, truths, num_classes)?;
    counts.add_scalar_mut(smoothing);
    for (q, mut col) in counts.column_iter_mut().enumerate() {
        let total = col.sum();
        if total == 0.0 {
            return Err(Error::MissingClass { class: q + 1 });
        }
        col /= total;
    }
    Ok(counts)
}

/// Train and test splits with ground truth.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
}

fn is_file_preset(preset: Preset) -> bool {
    matches!(preset, Preset::Digits | Preset::Letter | Preset::Files)
}

/// Loads one file as described by `data`; `like` fixes the vocabulary and
/// dimension of a test file.
pub fn load_file(path: &std::path::Path, data: &DataSettings, like: Option<&Dataset>) -> Result<Dataset> {
    let loaded = match data.format {
        FileFormat::Sparse => data::load_sparse_with(
            path,
            data::SparseOptions { num_classes: like.map(Dataset::num_classes), dim: like.map(Dataset::dim) },
        )?,
        FileFormat::Dense => {
            let label_column: Column = data.label_column.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
            let mut format =
                DenseFormat { delimiter: data.delimiter.as_bytes()[0], label_column, ..DenseFormat::default() };
            if let Some(names) = like.and_then(Dataset::label_names) {
                format = format.with_vocabulary(names.to_vec());
            }
            data::load_dense(path, &format)?
        }
    };
    if let Some(reference) = like {
        if loaded.dim() != reference.dim() {
            return Err(Error::DimensionMismatch { expected: reference.dim(), got: loaded.dim() });
        }
    }
    Ok(loaded)
}

fn load_files(config: &ExperimentConfig, rng: &mut Rng) -> Result<Prepared> {
    let d = &config.data;
    let train_path = d.train.as_ref().ok_or_else(|| Error::Config("data.train is required".into()))?;
    let full = load_file(train_path, d, None)?;
    let (train, test) = match (&d.test, d.split_at) {
        (Some(test_path), _) => {
            let test = load_file(test_path, d, Some(&full))?;
            (full, test)
        }
        (None, Some(k)) => {
            if k == 0 || k >= full.len() {
                return Err(Error::Config(format!("split_at {k} outside 1..{}", full.len())));
            }
            let idx: Vec<usize> = (0..full.len()).collect();
            (full.subset(&idx[..k]), full.subset(&idx[k..]))
        }
        (None, None) => {
            let (test, train) = data::holdout_split(&full, d.test_fraction, rng)?;
            (train, test)
        }
    };
    // File labels are the ground truth.
    let train = Dataset::clean(train.features().clone(), train.observed().to_vec(), train.num_classes())?;
    let test = Dataset::clean(test.features().clone(), test.observed().to_vec(), train.num_classes())?;
    Ok(Prepared { train, test })
}

/// Builds the train/test pair for `config` and applies the optional kernel
/// projection. Synthetic presets draw fresh data from `rng`.
pub fn prepare_data(config: &ExperimentConfig, rng: &mut Rng) -> Result<Prepared> {
    let d = &config.data;
    let mut prepared = match d.preset {
        Preset::Synthetic => {
            let mut sc = SyntheticConfig {
                num_classes: d.num_classes,
                n: d.n_train,
                theta: d.theta,
                dim: d.dim,
                ..SyntheticConfig::default()
            };
            if config.experiment.kind == ExperimentKind::Pipeline {
                // Room for the labelled sample plus a few points to label.
                sc.min_class_count = sc.min_class_count.max(2 * config.pipeline.m_per_class);
            }
            let (train, w_star) = data::generate(&sc, rng)?;
            let test = data::sample_from_concept(&w_star, d.n_test, d.theta, rng)?;
            Prepared { train, test }
        }
        Preset::Imbalanced => {
            let ic = ImbalancedConfig {
                num_classes: d.num_classes,
                n: d.n_train + d.n_test,
                dim: d.dim.max(2),
                theta: d.theta,
                imbalance: d.imbalance,
                spread: d.spread,
            };
            let (all, _) = data::generate_imbalanced(&ic, rng)?;
            let frac = d.n_test as f64 / all.len() as f64;
            let (test, train) = data::holdout_split(&all, frac, rng)?;
            Prepared { train, test }
        }
        _ => load_files(config, rng)?,
    };
    if d.normalize {
        prepared.train.features_mut().normalize_rows();
        prepared.test.features_mut().normalize_rows();
    }
    if config.kpca.dims > 0 {
        prepared = project(prepared, &config.kpca, rng)?;
    }
    Ok(prepared)
}

/// Kernel projection fitted on (a subset of) the training points; projected
/// rows are rescaled to unit norm.
fn project(prepared: Prepared, settings: &KpcaSettings, rng: &mut Rng) -> Result<Prepared> {
    let train = &prepared.train;
    let fit_on = if settings.fit_points > 0 && settings.fit_points < train.len() {
        let idx = rand::seq::index::sample(rng, train.len(), settings.fit_points).into_vec();
        train.features().select(&idx)
    } else {
        train.features().clone()
    };
    let sigma = match settings.sigma {
        Some(s) => s,
        None => median_bandwidth(&fit_on, BANDWIDTH_POINTS, rng)?,
    };
    let proj = kpca_fit(&fit_on, sigma, settings.dims)?;
    let mut tr = proj.transform_features(train.features())?;
    let mut te = proj.transform_features(prepared.test.features())?;
    tr.normalize_rows();
    te.normalize_rows();
    Ok(Prepared { train: train.with_features(tr)?, test: prepared.test.with_features(te)? })
}

/// Draws a reference matrix for which every requested family member passes
/// the invertibility guard.
pub fn sample_family(num_classes: usize, indices: &[u32], rng: &mut Rng) -> Result<NoiseFamily> {
    for _ in 0..MAX_FAMILY_DRAWS {
        let family = sample_reference(num_classes, rng)?;
        if indices.iter().all(|&i| confusion_at(&family, i).is_ok()) {
            return Ok(family);
        }
    }
    Err(Error::ReferenceSampling { attempts: MAX_FAMILY_DRAWS })
}

fn data_rng(config: &ExperimentConfig, repeat: u64) -> Rng {
    if is_file_preset(config.data.preset) {
        rng::stream(config.experiment.seed, &[DATA_STREAM])
    } else {
        rng::stream(config.experiment.seed, &[DATA_STREAM, repeat])
    }
}

/// File data is loaded and projected once; synthetic data is redrawn per repeat.
fn data_for_repeats(config: &ExperimentConfig) -> Result<Vec<Prepared>> {
    let n = config.experiment.repeats as u64;
    if is_file_preset(config.data.preset) {
        let p = prepare_data(config, &mut data_rng(config, 0))?;
        Ok(vec![p; n as usize])
    } else {
        (0..n).into_par_iter().map(|r| prepare_data(config, &mut data_rng(config, r))).collect()
    }
}

fn perceptron(config: &ExperimentConfig, data: &Dataset) -> Result<(WeightMatrix, usize)> {
    let (w, stats) = train_ultraconservative(data, config.perceptron.tau_policy()?, 0.0, config.perceptron.epochs)?;
    Ok((w, stats.updates))
}

/// Metrics of one trained model on one repeat.
#[derive(Debug, Clone, Copy)]
struct Outcome {
    eval: Evaluation,
    updates: usize,
}

/// Per-repeat outcomes of named models at one sweep point.
struct PointResult {
    x: f64,
    models: Vec<(&'static str, Outcome)>,
    seconds: f64,
    flagged: bool,
}

/// `results[r][k]` is repeat `r` at sweep point `k`.
fn assemble(indices: &[i64], results: Vec<Vec<PointResult>>) -> ExperimentReport {
    let mut rows = Vec::with_capacity(indices.len());
    for (k, &index) in indices.iter().enumerate() {
        let per_seed: Vec<&PointResult> = results.iter().map(|r| &r[k]).collect();
        let xs: Vec<f64> = per_seed.iter().map(|p| p.x).collect();
        let mut row = ReportRow::new(index, report::mean(&xs));
        row.wall_seconds = per_seed.iter().map(|p| p.seconds).sum();
        row.flagged = per_seed.iter().any(|p| p.flagged);
        for (m, (name, _)) in per_seed[0].models.iter().enumerate() {
            for metric in [ERROR_RATE, CONFUSION_RATE] {
                let mut s = Series::new(*name, metric);
                for p in &per_seed {
                    let o = p.models[m].1;
                    s.values.push(if metric == ERROR_RATE { o.eval.error_rate } else { o.eval.confusion_rate });
                    s.updates.push(o.updates);
                }
                row.series.push(s);
            }
        }
        rows.push(row);
    }
    ExperimentReport { rows }
}

/// For each noise index `i`: corrupt with `C_i`, then compare UMA given
/// `C_i` against UMA given the identity and the online learner on the noisy
/// labels. The x value is `‖C_i - diag(C_i)‖_F`.
pub fn run_noise_sweep(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let seed = config.experiment.seed;
    let indices = &config.experiment.noise_indices;
    let datasets = data_for_repeats(config)?;
    let results = datasets
        .par_iter()
        .enumerate()
        .map(|(r, prepared)| {
            let r = r as u64;
            let q = prepared.train.num_classes();
            let family = sample_family(q, indices, &mut rng::stream(seed, &[NOISE_STREAM, r]))?;
            let truth = prepared.train.truth_or_err()?;
            let identity = ConfusionMatrix::identity(q);
            indices
                .iter()
                .map(|&i| {
                    let start = Instant::now();
                    let c = confusion_at(&family, i)?;
                    let noisy = corrupt_labels(truth, &c, &mut rng::stream(seed, &[CORRUPT_STREAM, r, u64::from(i)]));
                    let train = prepared.train.with_observed(noisy)?;
                    let uma_cfg = config.uma.to_config(rng::derive_seed(seed, &[TRAIN_STREAM, r, u64::from(i)]))?;
                    let mut models = Vec::with_capacity(3);
                    let (w, s) = train_uma(&train, &c, &uma_cfg)?;
                    models.push(("uma", Outcome { eval: evaluate(&w, &prepared.test)?, updates: s.updates }));
                    let (w, s) = train_uma(&train, &identity, &uma_cfg)?;
                    models.push(("uma_identity", Outcome { eval: evaluate(&w, &prepared.test)?, updates: s.updates }));
                    let (w, u) = perceptron(config, &train)?;
                    models.push(("perceptron", Outcome { eval: evaluate(&w, &prepared.test)?, updates: u }));
                    Ok(PointResult {
                        x: c.off_diagonal_norm(),
                        models,
                        seconds: start.elapsed().as_secs_f64(),
                        flagged: false,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let idx: Vec<i64> = indices.iter().map(|&i| i64::from(i)).collect();
    Ok(assemble(&idx, results))
}

/// Corrupts once with `C_10 = M`, then trains UMA believing `C_i` for each
/// noise index. The x value is the approximation factor `1 - i/10`.
pub fn run_approximation_sweep(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    const TRUE_INDEX: u32 = 10;
    let seed = config.experiment.seed;
    let indices = &config.experiment.noise_indices;
    let mut needed = indices.clone();
    needed.push(TRUE_INDEX);
    let datasets = data_for_repeats(config)?;
    let results = datasets
        .par_iter()
        .enumerate()
        .map(|(r, prepared)| {
            let r = r as u64;
            let q = prepared.train.num_classes();
            let family = sample_family(q, &needed, &mut rng::stream(seed, &[NOISE_STREAM, r]))?;
            let truth_c = confusion_at(&family, TRUE_INDEX)?;
            let noisy =
                corrupt_labels(prepared.train.truth_or_err()?, &truth_c, &mut rng::stream(seed, &[CORRUPT_STREAM, r]));
            let train = prepared.train.with_observed(noisy)?;
            indices
                .iter()
                .map(|&i| {
                    let start = Instant::now();
                    let believed = confusion_at(&family, i)?;
                    let uma_cfg = config.uma.to_config(rng::derive_seed(seed, &[TRAIN_STREAM, r, u64::from(i)]))?;
                    let (w, s) = train_uma(&train, &believed, &uma_cfg)?;
                    Ok(PointResult {
                        x: approximation_factor(i64::from(i)),
                        models: vec![("uma", Outcome { eval: evaluate(&w, &prepared.test)?, updates: s.updates })],
                        seconds: start.elapsed().as_secs_f64(),
                        flagged: false,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let idx: Vec<i64> = indices.iter().map(|&i| i64::from(i)).collect();
    Ok(assemble(&idx, results))
}

/// Intermediate products of one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub estimated_confusion: ConfusionMatrix,
    /// Size of the held-out set used to estimate the confusion.
    pub conf_size: usize,
    /// Whether the first confusion estimate was singular and the run retried.
    pub retried: bool,
    /// (name, test evaluation, updates) for g, f_full, uma, f_y, f_conf.
    pub models: Vec<(&'static str, Evaluation, usize)>,
}

/// Self-labelling protocol on one train/test pair:
/// a few labelled examples per class train a rough classifier `g`; a small
/// held-out labelled set estimates the confusion of `g`; `g` labels the rest,
/// and UMA learns from those labels and the estimate.
pub fn pipeline_once(config: &ExperimentConfig, prepared: &Prepared, rng: &mut Rng) -> Result<PipelineRun> {
    let p = &config.pipeline;
    let train = &prepared.train;
    let q = train.num_classes();
    let truth = train.truth_or_err()?;

    let split = data::stratified_indices(train, p.m_per_class, rng)?;
    let sample = train.subset(&split.selected).relabeled_with_truth()?;
    let (g, g_updates) = perceptron(config, &sample)?;
    let rest = train.subset(&split.rest);

    let mut retried = false;
    let mut fraction = p.conf_fraction;
    let (hold, chat) = loop {
        let hold = data::holdout_indices(rest.len(), fraction, rng)?;
        let conf_set = rest.subset(&hold.selected);
        let preds = g.predict_all(conf_set.features())?;
        let estimate = estimate_confusion(&preds, conf_set.truth_or_err()?, q, p.smoothing)?;
        match invert_confusion(estimate) {
            Ok(c) => break (hold, c),
            Err(Error::SingularConfusion { .. }) if !retried && fraction * 2.0 < 1.0 => {
                retried = true;
                fraction *= 2.0;
            }
            Err(e) => return Err(e),
        }
    };
    let conf_set = rest.subset(&hold.selected).relabeled_with_truth()?;
    let unlabeled = rest.subset(&hold.rest);
    let self_labels = g.predict_all(unlabeled.features())?;
    let self_labeled = unlabeled.with_observed(self_labels)?;

    let uma_cfg = config.uma.to_config(rand::Rng::random(rng))?;
    let mut models = Vec::with_capacity(5);
    models.push(("g", evaluate(&g, &prepared.test)?, g_updates));
    let full = Dataset::clean(train.features().clone(), truth.to_vec(), q)?;
    let (w, u) = perceptron(config, &full)?;
    models.push(("f_full", evaluate(&w, &prepared.test)?, u));
    let (w, s) = train_uma(&self_labeled, &chat, &uma_cfg)?;
    models.push(("uma", evaluate(&w, &prepared.test)?, s.updates));
    let (w, u) = perceptron(config, &self_labeled)?;
    models.push(("f_y", evaluate(&w, &prepared.test)?, u));
    let (w, u) = perceptron(config, &conf_set)?;
    models.push(("f_conf", evaluate(&w, &prepared.test)?, u));
    Ok(PipelineRun { estimated_confusion: chat, conf_size: hold.selected.len(), retried, models })
}

/// [`pipeline_once`] over every repeat; a single report row with x = m.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let seed = config.experiment.seed;
    let datasets = data_for_repeats(config)?;
    let results = datasets
        .par_iter()
        .enumerate()
        .map(|(r, prepared)| {
            let start = Instant::now();
            let run = pipeline_once(config, prepared, &mut rng::stream(seed, &[SPLIT_STREAM, r as u64]))?;
            let models = run.models.iter().map(|&(name, eval, updates)| (name, Outcome { eval, updates })).collect();
            Ok(vec![PointResult {
                x: config.pipeline.m_per_class as f64,
                models,
                seconds: start.elapsed().as_secs_f64(),
                flagged: run.retried,
            }])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(&[0], results))
}

/// Metrics logged at regular update counts during one UMA run.
struct Trace {
    /// (updates, evaluation), increasing in updates.
    points: Vec<(usize, Evaluation)>,
    final_updates: usize,
    final_eval: Evaluation,
}

impl Trace {
    fn at(&self, updates: usize) -> Evaluation {
        if updates >= self.final_updates {
            return self.final_eval;
        }
        match self.points.binary_search_by_key(&updates, |p| p.0) {
            Ok(k) => self.points[k].1,
            Err(_) => unreachable!("grid points are logged"),
        }
    }
}

/// Trains UMA with each selection strategy on the same corrupted data and
/// logs test error and confusion rates every `log_every` updates. Row
/// indices are update counts; a run that stopped early keeps its final value.
pub fn run_strategy_study(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let seed = config.experiment.seed;
    let every = config.study.log_every;
    let level = config.study.noise_index;
    let datasets = data_for_repeats(config)?;
    let traces: Vec<Vec<Trace>> = datasets
        .par_iter()
        .enumerate()
        .map(|(r, prepared)| {
            let r = r as u64;
            let q = prepared.train.num_classes();
            let family = sample_family(q, &[level], &mut rng::stream(seed, &[NOISE_STREAM, r]))?;
            let c = confusion_at(&family, level)?;
            let noisy =
                corrupt_labels(prepared.train.truth_or_err()?, &c, &mut rng::stream(seed, &[CORRUPT_STREAM, r]));
            let train = prepared.train.with_observed(noisy)?;
            SelectionStrategy::ALL
                .iter()
                .map(|&strategy| {
                    let mut uma_cfg = config.uma.to_config(rng::derive_seed(seed, &[TRAIN_STREAM, r]))?;
                    uma_cfg.strategy = strategy;
                    let mut points = Vec::new();
                    let mut failure = None;
                    let (w, stats) = train_uma_with_observer(&train, &c, &uma_cfg, |u, w| {
                        if u > 0 && u % every == 0 && failure.is_none() {
                            match evaluate(w, &prepared.test) {
                                Ok(e) => points.push((u, e)),
                                Err(e) => failure = Some(e),
                            }
                        }
                    })?;
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    Ok(Trace { points, final_updates: stats.updates, final_eval: evaluate(&w, &prepared.test)? })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let longest = traces.iter().flatten().map(|t| t.final_updates).max().unwrap_or(0);
    let mut grid: Vec<usize> = (1..).map(|k| k * every).take_while(|&u| u < longest).collect();
    grid.push(longest);
    let mut rows = Vec::with_capacity(grid.len());
    for &u in &grid {
        let mut row = ReportRow::new(u as i64, u as f64);
        for (k, strategy) in SelectionStrategy::ALL.iter().enumerate() {
            for metric in [ERROR_RATE, CONFUSION_RATE] {
                let mut s = Series::new(strategy.name(), metric);
                for per_seed in &traces {
                    let t = &per_seed[k];
                    let e = t.at(u);
                    s.values.push(if metric == ERROR_RATE { e.error_rate } else { e.confusion_rate });
                    s.updates.push(u.min(t.final_updates));
                }
                row.series.push(s);
            }
        }
        rows.push(row);
    }
    Ok(ExperimentReport { rows })
}

/// Dispatches on `config.experiment.kind`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    match config.experiment.kind {
        ExperimentKind::SweepNoise => run_noise_sweep(config),
        ExperimentKind::SweepApprox => run_approximation_sweep(config),
        ExperimentKind::Pipeline => run_pipeline(config),
        ExperimentKind::StrategyStudy => run_strategy_study(config),
    }
}
