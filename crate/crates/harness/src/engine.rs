//! Cross-validated benchmark runs.
//!
//! One job covers a (dataset, base learner, outer fold) cell: the fold's
//! preprocessing is fitted on its training part, one one-vs-one bagged model
//! is trained, the tuned combiners pick their parameters by inner
//! cross-validation on the same training part, and every requested combiner
//! is scored on the untouched test part. Each job derives its random streams
//! from the run seed and its own coordinates, so results do not depend on
//! the number of worker threads or the order in which jobs finish.

use std::time::Instant;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use lincomb_core::evaluation::{tune_potential, tune_zeta};
use lincomb_core::resample::{self, complement, derive_seed};
use lincomb_core::{
    ovo_train, BagSpec, Combiner, CombinerKind, InnerResponses, LabeledDataset, MetricSet,
    TrainerConfig, TrainerKind,
};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::preprocess::Preprocessor;

/// Scores of one combiner on one outer test fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub learner: String,
    pub combiner: String,
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub components: usize,
    pub macro_fdr: f64,
    pub macro_fnr: f64,
    pub macro_f1_loss: f64,
    pub micro_fdr: f64,
    pub micro_fnr: f64,
    pub micro_f1_loss: f64,
    pub kappa: f64,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub zeta: Option<f64>,
}

impl RunRecord {
    /// Value of a criterion named as in [`MetricSet::NAMES`].
    pub fn criterion(&self, name: &str) -> Option<f64> {
        Some(match name {
            "macro_fdr" => self.macro_fdr,
            "macro_fnr" => self.macro_fnr,
            "macro_f1_loss" => self.macro_f1_loss,
            "micro_fdr" => self.micro_fdr,
            "micro_fnr" => self.micro_fnr,
            "micro_f1_loss" => self.micro_f1_loss,
            "kappa" => self.kappa,
            _ => return None,
        })
    }
}

/// Wall time of one job. Kept apart from [`RunRecord`] so result files are
/// reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub dataset: String,
    pub learner: String,
    pub fold: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub records: Vec<RunRecord>,
    pub timings: Vec<Timing>,
}

/// Fits the fold's preprocessing on the training rows only and applies it to
/// the whole dataset.
pub fn fit_fold_transform(
    data: &LabeledDataset,
    train: &[usize],
    pca_variance: f64,
) -> Result<(Preprocessor, LabeledDataset)> {
    let train_rows: Vec<Vec<f64>> = train.iter().map(|&i| data.rows()[i].clone()).collect();
    let pre = Preprocessor::fit(&train_rows, pca_variance)?;
    let transformed = data.with_rows(pre.transform(data.rows()))?;
    Ok((pre, transformed))
}

/// Outer fold count actually used: `requested`, lowered to the smallest
/// class size when stratification could not fill every fold.
pub fn effective_folds(data: &LabeledDataset, requested: usize, name: &str) -> Result<usize> {
    let smallest = data.class_counts().into_iter().min().unwrap_or(0);
    if smallest < 2 {
        return Err(Error::Core(lincomb_core::Error::Data(format!(
            "{name}: a class has {smallest} instances, cross-validation needs at least 2"
        ))));
    }
    if smallest < requested {
        warn!("{name}: smallest class has {smallest} instances, using {smallest} folds instead of {requested}");
        return Ok(smallest);
    }
    Ok(requested)
}

fn learner_id(kind: TrainerKind) -> u64 {
    TrainerKind::ALL
        .iter()
        .position(|&k| k == kind)
        .expect("kind listed in ALL") as u64
}

struct Job<'a> {
    dataset_index: usize,
    name: &'a str,
    data: &'a LabeledDataset,
    learner: TrainerKind,
    fold: usize,
    test: &'a [usize],
}

fn run_job(job: &Job<'_>, cfg: &ExperimentConfig) -> Result<(Vec<RunRecord>, Timing)> {
    let start = Instant::now();
    let path = [
        job.dataset_index as u64,
        learner_id(job.learner),
        job.fold as u64,
    ];
    let stream = |purpose: u64| derive_seed(cfg.seed, &[purpose, path[0], path[1], path[2]]);

    let train = complement(job.data.len(), job.test);
    let (pre, transformed) = fit_fold_transform(job.data, &train, cfg.pca_variance)?;
    let train_data = transformed.subset(&train);
    let trainer = TrainerConfig {
        seed: stream(3),
        ..TrainerConfig::new(job.learner)
    };
    let bag = BagSpec {
        seed: stream(1),
        ..cfg.bag.clone()
    };
    let model = ovo_train(&train_data, &trainer, &bag, Combiner::Voting)?;

    let mut combiners = Vec::with_capacity(cfg.combiners.len());
    let needs_tuning = cfg.combiners.iter().any(|k| k.is_tuned());
    let inner = if needs_tuning {
        let inner_bag = BagSpec {
            seed: stream(4),
            ..cfg.bag.clone()
        };
        Some(InnerResponses::collect(
            &train_data,
            &trainer,
            &inner_bag,
            cfg.grid.inner_folds,
            stream(2),
        )?)
    } else {
        None
    };
    for &kind in &cfg.combiners {
        let combiner = match kind {
            CombinerKind::ClassPotential => {
                let tuned =
                    tune_potential(inner.as_ref().expect("tuning data collected"), &cfg.grid)?;
                Combiner::ClassPotential(tuned.best)
            }
            CombinerKind::SymmetricPotential => {
                let tuned = tune_zeta(inner.as_ref().expect("tuning data collected"), &cfg.grid)?;
                Combiner::SymmetricPotential(tuned.best)
            }
            other => Combiner::from_parts(other, None, None)?,
        };
        combiners.push(combiner);
    }

    let truth: Vec<usize> = job.test.iter().map(|&i| transformed.labels()[i]).collect();
    let mut predicted = vec![Vec::with_capacity(job.test.len()); combiners.len()];
    for &i in job.test {
        let responses = model.responses(&transformed.rows()[i])?;
        for (c, combiner) in combiners.iter().enumerate() {
            predicted[c].push(model.predict_from(&responses, combiner)?);
        }
    }

    let mut records = Vec::with_capacity(combiners.len());
    for (combiner, pred) in combiners.iter().zip(&predicted) {
        let m = MetricSet::compute(&truth, pred, transformed.n_classes())?;
        let (beta, gamma, zeta) = match combiner {
            Combiner::ClassPotential(p) => (Some(p.beta()), Some(p.gamma()), None),
            Combiner::SymmetricPotential(z) => (None, None, Some(z.value())),
            _ => (None, None, None),
        };
        records.push(RunRecord {
            dataset: job.name.to_string(),
            learner: job.learner.name().to_string(),
            combiner: combiner.kind().name().to_string(),
            fold: job.fold,
            n_train: train.len(),
            n_test: job.test.len(),
            components: pre.n_components(),
            macro_fdr: m.macro_fdr,
            macro_fnr: m.macro_fnr,
            macro_f1_loss: m.macro_f1_loss,
            micro_fdr: m.micro_fdr,
            micro_fnr: m.micro_fnr,
            micro_f1_loss: m.micro_f1_loss,
            kappa: m.kappa,
            beta,
            gamma,
            zeta,
        });
    }
    let timing = Timing {
        dataset: job.name.to_string(),
        learner: job.learner.name().to_string(),
        fold: job.fold,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((records, timing))
}

/// Runs every (dataset, learner, fold) job on `jobs` worker threads
/// (0 lets the thread pool decide). Records come back ordered by dataset,
/// learner, combiner and fold as listed in `cfg`.
pub fn cross_validate(
    cfg: &ExperimentConfig,
    datasets: &[(String, LabeledDataset)],
    jobs: usize,
) -> Result<Outcome> {
    cfg.validate()?;
    let mut folds = Vec::with_capacity(datasets.len());
    for (d, (name, data)) in datasets.iter().enumerate() {
        let k = effective_folds(data, cfg.outer_folds, name)?;
        folds.push(resample::stratified_folds(
            data.labels(),
            k,
            derive_seed(cfg.seed, &[0, d as u64]),
        )?);
    }
    let mut work = Vec::new();
    for (d, (name, data)) in datasets.iter().enumerate() {
        for &learner in &cfg.learners {
            for (fold, test) in folds[d].iter().enumerate() {
                work.push(Job {
                    dataset_index: d,
                    name,
                    data,
                    learner,
                    fold,
                    test,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<(Vec<RunRecord>, Timing)>> =
        pool.install(|| work.par_iter().map(|job| run_job(job, cfg)).collect());

    let mut outcome = Outcome::default();
    let mut keyed = Vec::new();
    for (job, result) in work.iter().zip(results) {
        let (records, timing) = result?;
        let learner_pos = cfg
            .learners
            .iter()
            .position(|&l| l == job.learner)
            .unwrap_or(0);
        for (c, record) in records.into_iter().enumerate() {
            keyed.push(((job.dataset_index, learner_pos, c, job.fold), record));
        }
        outcome.timings.push(timing);
    }
    keyed.sort_by_key(|(key, _)| *key);
    outcome.records = keyed.into_iter().map(|(_, r)| r).collect();
    Ok(outcome)
}
