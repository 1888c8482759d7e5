//! Experiment configuration, read from TOML.
//!
//! ```toml
//! datasets = ["data/iris.csv", "data/banana.csv"]
//! learners = ["NC", "FLDA"]
//! combiners = ["SM", "MA", "MV", "PF", "PC"]
//! outer_folds = 10
//! pca_variance = 0.95
//! seed = 1
//! output = "results"
//!
//! [bagging]
//! n_members = 11
//! sample_fraction = 0.8
//! replacement = false
//!
//! [grid]
//! betas = [0.0, 0.5, 1.0]
//! gammas = [0.25, 1.0, 4.0]
//! zetas = [0.25, 1.0, 4.0]
//! inner_folds = 3
//! ```
//!
//! Only `datasets` is required. Relative dataset and output paths are
//! resolved against the directory of the configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use lincomb_core::{BagSpec, CombinerKind, GridSpec, TrainerKind};
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub datasets: Vec<PathBuf>,
    pub learners: Vec<TrainerKind>,
    pub combiners: Vec<CombinerKind>,
    pub outer_folds: usize,
    pub bag: BagSpec,
    pub grid: GridSpec,
    pub pca_variance: f64,
    pub seed: u64,
    pub output: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    datasets: Vec<PathBuf>,
    learners: Option<Vec<String>>,
    combiners: Option<Vec<String>>,
    outer_folds: Option<usize>,
    pca_variance: Option<f64>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    bagging: Option<RawBagging>,
    grid: Option<RawGrid>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBagging {
    n_members: Option<usize>,
    sample_fraction: Option<f64>,
    replacement: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    betas: Option<Vec<f64>>,
    gammas: Option<Vec<f64>>,
    zetas: Option<Vec<f64>>,
    inner_folds: Option<usize>,
}

impl ExperimentConfig {
    /// Defaults for everything except the dataset list.
    pub fn new(datasets: Vec<PathBuf>) -> Self {
        ExperimentConfig {
            datasets,
            learners: TrainerKind::ALL.to_vec(),
            combiners: CombinerKind::ALL.to_vec(),
            outer_folds: 10,
            bag: BagSpec::default(),
            grid: GridSpec::default(),
            pca_variance: 0.95,
            seed: 0,
            output: PathBuf::from("results"),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let mut cfg = ExperimentConfig::new(raw.datasets.into_iter().map(resolve).collect());
        if let Some(names) = raw.learners {
            cfg.learners = names
                .iter()
                .map(|n| n.parse())
                .collect::<lincomb_core::Result<_>>()?;
        }
        if let Some(names) = raw.combiners {
            cfg.combiners = names
                .iter()
                .map(|n| n.parse())
                .collect::<lincomb_core::Result<_>>()?;
        }
        if let Some(k) = raw.outer_folds {
            cfg.outer_folds = k;
        }
        if let Some(v) = raw.pca_variance {
            cfg.pca_variance = v;
        }
        if let Some(s) = raw.seed {
            cfg.seed = s;
        }
        cfg.output = resolve(raw.output.unwrap_or(cfg.output));
        let bagging = raw.bagging.unwrap_or_default();
        if let Some(n) = bagging.n_members {
            cfg.bag.n_members = n;
        }
        if let Some(f) = bagging.sample_fraction {
            cfg.bag.sample_fraction = f;
        }
        if let Some(r) = bagging.replacement {
            cfg.bag.replacement = r;
        }
        let grid = raw.grid.unwrap_or_default();
        if let Some(b) = grid.betas {
            cfg.grid.betas = b;
        }
        if let Some(g) = grid.gammas {
            cfg.grid.gammas = g;
        }
        if let Some(z) = grid.zetas {
            cfg.grid.zetas = z;
        }
        if let Some(k) = grid.inner_folds {
            cfg.grid.inner_folds = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.datasets.is_empty() {
            return fail("at least one dataset is required");
        }
        if self.learners.is_empty() {
            return fail("at least one base learner is required");
        }
        if self.combiners.is_empty() {
            return fail("at least one combiner is required");
        }
        if self.outer_folds < 2 {
            return fail("outer_folds must be at least 2");
        }
        if !(self.pca_variance > 0.0 && self.pca_variance <= 1.0) {
            return fail("pca_variance must lie in (0, 1]");
        }
        self.bag.validate()?;
        self.grid.validate()?;
        Ok(())
    }
}
