//! Confusion counts, macro and micro averaged losses, Cohen's kappa, and the
//! kappa-driven search over combiner parameters.

use log::warn;

use crate::classifiers::TrainerConfig;
use crate::combiners::{ovo_train, BagSpec, Combiner, MemberResponse, OvoModel};
use crate::error::{Error, Result};
use crate::geometry::{PotentialParams, ZetaParam};
use crate::primitives::LabeledDataset;
use crate::resample;

/// One-vs-rest counts of a single class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ClassCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// One [`ClassCounts`] per class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    classes: Vec<ClassCounts>,
}

fn check_labels(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<()> {
    if truth.len() != predicted.len() {
        return Err(Error::Data(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Data("no labels to evaluate".into()));
    }
    if let Some(&l) = truth.iter().chain(predicted).find(|&&l| l >= n_classes) {
        return Err(Error::Data(format!(
            "label {l} outside {n_classes} classes"
        )));
    }
    Ok(())
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionCounts {
    pub fn new(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        check_labels(truth, predicted, n_classes)?;
        let n = truth.len() as u64;
        let mut classes = vec![ClassCounts::default(); n_classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t == p {
                classes[t].tp += 1;
            } else {
                classes[p].fp += 1;
                classes[t].fn_ += 1;
            }
        }
        for c in &mut classes {
            c.tn = n - c.tp - c.fp - c.fn_;
        }
        Ok(ConfusionCounts { classes })
    }

    pub fn classes(&self) -> &[ClassCounts] {
        &self.classes
    }

    /// Unweighted class means of FDR, FNR and F1 loss. A class whose
    /// denominator is zero contributes zero.
    pub fn macro_metrics(&self) -> (f64, f64, f64) {
        let k = self.classes.len() as f64;
        let (mut fdr, mut fnr, mut f1) = (0.0, 0.0, 0.0);
        for c in &self.classes {
            fdr += ratio(c.fp, c.tp + c.fp);
            fnr += ratio(c.fn_, c.tp + c.fn_);
            f1 += ratio(c.fp + c.fn_, 2 * c.tp + c.fp + c.fn_);
        }
        (fdr / k, fnr / k, f1 / k)
    }

    /// FDR, FNR and F1 loss of the counts pooled over classes.
    pub fn micro_metrics(&self) -> (f64, f64, f64) {
        let tp: u64 = self.classes.iter().map(|c| c.tp).sum();
        let fp: u64 = self.classes.iter().map(|c| c.fp).sum();
        let fn_: u64 = self.classes.iter().map(|c| c.fn_).sum();
        (
            ratio(fp, tp + fp),
            ratio(fn_, tp + fn_),
            ratio(fp + fn_, 2 * tp + fp + fn_),
        )
    }
}

/// Cohen's unweighted kappa. When chance agreement is certain (both label
/// sequences constant and equal) the result is 1.
pub fn cohen_kappa(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<f64> {
    check_labels(truth, predicted, n_classes)?;
    let n = truth.len() as f64;
    let mut row = vec![0u64; n_classes];
    let mut col = vec![0u64; n_classes];
    let mut agree = 0u64;
    for (&t, &p) in truth.iter().zip(predicted) {
        row[t] += 1;
        col[p] += 1;
        agree += u64::from(t == p);
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = row
        .iter()
        .zip(&col)
        .map(|(&r, &c)| (r as f64 / n) * (c as f64 / n))
        .sum();
    if p_e >= 1.0 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// The six losses and kappa of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub macro_fdr: f64,
    pub macro_fnr: f64,
    pub macro_f1_loss: f64,
    pub micro_fdr: f64,
    pub micro_fnr: f64,
    pub micro_f1_loss: f64,
    pub kappa: f64,
}

impl MetricSet {
    pub const NAMES: [&'static str; 7] = [
        "macro_fdr",
        "macro_fnr",
        "macro_f1_loss",
        "micro_fdr",
        "micro_fnr",
        "micro_f1_loss",
        "kappa",
    ];

    pub fn compute(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        let counts = ConfusionCounts::new(truth, predicted, n_classes)?;
        let (macro_fdr, macro_fnr, macro_f1_loss) = counts.macro_metrics();
        let (micro_fdr, micro_fnr, micro_f1_loss) = counts.micro_metrics();
        Ok(MetricSet {
            macro_fdr,
            macro_fnr,
            macro_f1_loss,
            micro_fdr,
            micro_fnr,
            micro_f1_loss,
            kappa: cohen_kappa(truth, predicted, n_classes)?,
        })
    }

    /// Values in the order of [`MetricSet::NAMES`].
    pub fn values(&self) -> [f64; 7] {
        [
            self.macro_fdr,
            self.macro_fnr,
            self.macro_f1_loss,
            self.micro_fdr,
            self.micro_fnr,
            self.micro_f1_loss,
            self.kappa,
        ]
    }

    /// The six losses, in the order of the first six [`MetricSet::NAMES`].
    pub fn losses(&self) -> [f64; 6] {
        let v = self.values();
        [v[0], v[1], v[2], v[3], v[4], v[5]]
    }
}

/// Candidate parameter values and the number of inner folds.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub zetas: Vec<f64>,
    pub inner_folds: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        let gammas: Vec<f64> = (-2..=2).map(|e| 2f64.powi(e)).collect();
        GridSpec {
            betas: (0..=10).map(|i| i as f64 / 10.0).collect(),
            zetas: gammas.clone(),
            gammas,
            inner_folds: 3,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.inner_folds < 2 {
            return Err(Error::Config("inner_folds must be at least 2".into()));
        }
        if self.betas.is_empty() || self.gammas.is_empty() || self.zetas.is_empty() {
            return Err(Error::Config("parameter grids must not be empty".into()));
        }
        self.potential_cells()?;
        self.zeta_cells()?;
        Ok(())
    }

    /// All `(β, γ)` cells, `β` varying slowest.
    pub fn potential_cells(&self) -> Result<Vec<PotentialParams>> {
        let mut cells = Vec::with_capacity(self.betas.len() * self.gammas.len());
        for &b in &self.betas {
            for &g in &self.gammas {
                cells.push(PotentialParams::new(b, g)?);
            }
        }
        Ok(cells)
    }

    pub fn zeta_cells(&self) -> Result<Vec<ZetaParam>> {
        self.zetas.iter().map(|&z| ZetaParam::new(z)).collect()
    }
}

/// Out-of-fold member responses of an inner cross-validation.
///
/// Models are trained once per inner fold; every candidate combiner is then
/// scored on the same responses, so all grid cells see identical members.
#[derive(Debug, Clone)]
pub struct InnerResponses {
    n_classes: usize,
    truth: Vec<usize>,
    /// Per validation instance: the fold it came from and its pair responses.
    responses: Vec<(usize, Vec<Vec<MemberResponse>>)>,
    models: Vec<Option<OvoModel>>,
}

impl InnerResponses {
    /// Runs `folds`-fold stratified cross-validation on `data`. Fold `k`
    /// trains with bag seed `derive_seed(bag.seed, [k])`. A fold whose
    /// training fails is skipped with a warning; if every fold fails the
    /// error of the last one is returned.
    pub fn collect(
        data: &LabeledDataset,
        trainer: &TrainerConfig,
        bag: &BagSpec,
        folds: usize,
        seed: u64,
    ) -> Result<Self> {
        let fold_sets = resample::stratified_folds(data.labels(), folds, seed)?;
        let mut truth = Vec::new();
        let mut responses = Vec::new();
        let mut models = Vec::with_capacity(folds);
        let mut last_error = None;
        for (k, test) in fold_sets.iter().enumerate() {
            let train_idx = resample::complement(data.len(), test);
            let spec = BagSpec {
                seed: resample::derive_seed(bag.seed, &[k as u64]),
                ..bag.clone()
            };
            // Any combiner works here; geometry is fitted regardless.
            match ovo_train(&data.subset(&train_idx), trainer, &spec, Combiner::Voting) {
                Ok(model) => {
                    for &i in test {
                        truth.push(data.labels()[i]);
                        responses.push((k, model.responses(&data.rows()[i])?));
                    }
                    models.push(Some(model));
                }
                Err(e) => {
                    warn!("inner fold {k} skipped: {e}");
                    last_error = Some(e);
                    models.push(None);
                }
            }
        }
        if truth.is_empty() {
            return Err(last_error.unwrap_or_else(|| Error::Training("no inner folds".into())));
        }
        Ok(InnerResponses {
            n_classes: data.n_classes(),
            truth,
            responses,
            models,
        })
    }

    /// Pooled out-of-fold kappa of `combiner`.
    pub fn kappa(&self, combiner: &Combiner) -> Result<f64> {
        let mut predicted = Vec::with_capacity(self.truth.len());
        for (fold, r) in &self.responses {
            let model = self.models[*fold]
                .as_ref()
                .expect("responses only from trained folds");
            predicted.push(model.predict_from(r, combiner)?);
        }
        cohen_kappa(&self.truth, &predicted, self.n_classes)
    }

    /// Kappa of every candidate, in order.
    pub fn kappa_table(&self, candidates: &[Combiner]) -> Result<Vec<f64>> {
        candidates.iter().map(|c| self.kappa(c)).collect()
    }
}

/// Outcome of a parameter search: the chosen value and the full kappa table.
#[derive(Debug, Clone, PartialEq)]
pub struct Tuned<P> {
    pub best: P,
    pub table: Vec<(P, f64)>,
}

/// First index of the largest value. Candidates are listed in tie-break
/// order, so the first maximum is the preferred one.
fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

fn pick<P: Copy>(cells: Vec<P>, kappas: Vec<f64>) -> Result<Tuned<P>> {
    let best = argmax_first(&kappas)
        .ok_or_else(|| Error::Training("no grid cell produced a kappa".into()))?;
    Ok(Tuned {
        best: cells[best],
        table: cells.into_iter().zip(kappas).collect(),
    })
}

/// `(β, γ)` with the highest inner kappa; ties go to the smaller `β`, then
/// the smaller `γ`.
pub fn tune_potential(inner: &InnerResponses, grid: &GridSpec) -> Result<Tuned<PotentialParams>> {
    let mut cells = grid.potential_cells()?;
    cells.sort_by(|a, b| {
        a.beta()
            .total_cmp(&b.beta())
            .then(a.gamma().total_cmp(&b.gamma()))
    });
    let candidates: Vec<Combiner> = cells.iter().map(|&p| Combiner::ClassPotential(p)).collect();
    pick(cells, inner.kappa_table(&candidates)?)
}

/// `ζ` with the highest inner kappa; ties go to the smaller value.
pub fn tune_zeta(inner: &InnerResponses, grid: &GridSpec) -> Result<Tuned<ZetaParam>> {
    let mut cells = grid.zeta_cells()?;
    cells.sort_by(|a, b| a.value().total_cmp(&b.value()));
    let candidates: Vec<Combiner> = cells
        .iter()
        .map(|&z| Combiner::SymmetricPotential(z))
        .collect();
    pick(cells, inner.kappa_table(&candidates)?)
}

/// Inner cross-validation followed by [`tune_potential`]. The inner folds
/// are drawn with `bag.seed`.
pub fn grid_search(
    data: &LabeledDataset,
    trainer: &TrainerConfig,
    bag: &BagSpec,
    grid: &GridSpec,
) -> Result<Tuned<PotentialParams>> {
    grid.validate()?;
    let inner = InnerResponses::collect(data, trainer, bag, grid.inner_folds, bag.seed)?;
    tune_potential(&inner, grid)
}
