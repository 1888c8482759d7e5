//! Trainers that each produce a [`LinearModel`] from a binary dataset.
//!
//! All trainers are deterministic given the data and `TrainerConfig::seed`,
//! and each one is sign-symmetric: swapping the two labels yields exactly the
//! negated plane.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::primitives::{dot_unchecked, mean_of, BinaryDataset, BinaryLabel, LinearModel};
use crate::resample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrainerKind {
    /// Fisher linear discriminant.
    Flda,
    /// Ridge-regularized logistic regression.
    Logistic,
    /// A single sigmoid unit trained by SGD.
    Mlp,
    /// Perpendicular bisector of the two class centroids.
    NearestCentroid,
    /// Soft-margin linear SVM.
    Svm,
}

impl TrainerKind {
    pub const ALL: [TrainerKind; 5] = [
        TrainerKind::Flda,
        TrainerKind::Logistic,
        TrainerKind::Mlp,
        TrainerKind::NearestCentroid,
        TrainerKind::Svm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrainerKind::Flda => "FLDA",
            TrainerKind::Logistic => "LR",
            TrainerKind::Mlp => "MLP",
            TrainerKind::NearestCentroid => "NC",
            TrainerKind::Svm => "SVM",
        }
    }
}

impl fmt::Display for TrainerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrainerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TrainerKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown base learner `{s}`")))
    }
}

/// Trainer hyper-parameters.
///
/// `regularization` is the ridge coefficient for LR and MLP and the
/// soft-margin constant `C` for SVM. FLDA and NC ignore everything except
/// `kind`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub kind: TrainerKind,
    pub max_iters: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub seed: u64,
}

impl TrainerConfig {
    pub fn new(kind: TrainerKind) -> Self {
        let (max_iters, regularization) = match kind {
            TrainerKind::Logistic => (500, 1e-8),
            TrainerKind::Mlp => (500, 0.0),
            TrainerKind::Svm => (1000, 1.0),
            TrainerKind::Flda | TrainerKind::NearestCentroid => (1, 0.0),
        };
        TrainerConfig {
            kind,
            max_iters,
            learning_rate: 0.1,
            regularization,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(Error::Config("regularization must be non-negative".into()));
        }
        Ok(())
    }
}

/// A trained plane plus optimizer diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub model: LinearModel,
    pub converged: bool,
    pub iterations: usize,
    /// The optimum had (numerically) zero weights and the exported plane is
    /// the small-weight limit rather than an optimizer iterate.
    pub degenerate: bool,
}

impl Fit {
    fn closed_form(model: LinearModel) -> Self {
        Fit {
            model,
            converged: true,
            iterations: 1,
            degenerate: false,
        }
    }
}

pub fn train(data: &BinaryDataset, cfg: &TrainerConfig) -> Result<Fit> {
    cfg.validate()?;
    match cfg.kind {
        TrainerKind::Flda => train_flda(data).map(Fit::closed_form),
        TrainerKind::NearestCentroid => train_nearest_centroid(data).map(Fit::closed_form),
        TrainerKind::Logistic => train_logistic(data, cfg),
        TrainerKind::Mlp => train_mlp(data, cfg),
        TrainerKind::Svm => train_linear_svm(data, cfg),
    }
}

fn class_means(data: &BinaryDataset) -> (Vec<f64>, Vec<f64>) {
    let d = data.dim();
    let pos = mean_of(data.class_rows(BinaryLabel::Positive), d).expect("class checked non-empty");
    let neg = mean_of(data.class_rows(BinaryLabel::Negative), d).expect("class checked non-empty");
    (pos, neg)
}

/// Plane with normal along `direction` passing through the midpoint of `a` and `b`.
fn plane_through_midpoint(direction: Vec<f64>, a: &[f64], b: &[f64]) -> Result<LinearModel> {
    let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    let offset = -dot_unchecked(&direction, &mid);
    LinearModel::new(direction, offset)
}

/// Fisher discriminant: `n ∝ (S_w + λI)⁻¹ (μ₊ − μ₋)` with the boundary halfway
/// between the projected class means. `λ = 1e-6 · trace(S_w) / d`.
pub fn train_flda(data: &BinaryDataset) -> Result<LinearModel> {
    data.require_classes(2)?;
    let d = data.dim();
    let (mu_pos, mu_neg) = class_means(data);
    let mut scatter = DMatrix::<f64>::zeros(d, d);
    for (label, mu) in [
        (BinaryLabel::Positive, &mu_pos),
        (BinaryLabel::Negative, &mu_neg),
    ] {
        let mut class_scatter = DMatrix::<f64>::zeros(d, d);
        for x in data.class_rows(label) {
            let c = DVector::from_iterator(d, x.iter().zip(mu.iter()).map(|(a, b)| a - b));
            class_scatter += &c * c.transpose();
        }
        scatter += class_scatter;
    }
    let trace = scatter.trace();
    let ridge = if trace > 0.0 {
        1e-6 * trace / d as f64
    } else {
        1.0
    };
    for i in 0..d {
        scatter[(i, i)] += ridge;
    }
    let diff = DVector::from_iterator(d, mu_pos.iter().zip(&mu_neg).map(|(a, b)| a - b));
    let chol = scatter
        .cholesky()
        .ok_or_else(|| Error::Training("within-class scatter is not positive definite".into()))?;
    let direction = chol.solve(&diff);
    plane_through_midpoint(direction.iter().copied().collect(), &mu_pos, &mu_neg)
        .map_err(|_| Error::Degenerate("class means coincide".into()))
}

/// Perpendicular bisector of the two class centroids.
pub fn train_nearest_centroid(data: &BinaryDataset) -> Result<LinearModel> {
    data.require_classes(2)?;
    let (pos, neg) = class_means(data);
    let direction: Vec<f64> = pos.iter().zip(&neg).map(|(a, b)| a - b).collect();
    plane_through_midpoint(direction, &pos, &neg)
        .map_err(|_| Error::Degenerate("class centroids coincide".into()))
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
#[inline]
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Feature vector with a trailing constant 1 for the bias.
fn augmented(data: &BinaryDataset) -> Vec<Vec<f64>> {
    data.rows()
        .iter()
        .map(|x| {
            let mut v = x.clone();
            v.push(1.0);
            v
        })
        .collect()
}

fn model_from_augmented(w: &[f64]) -> Result<LinearModel> {
    let (weights, bias) = w.split_at(w.len() - 1);
    LinearModel::new(weights.to_vec(), bias[0])
}

/// Logistic regression with an ℓ2 penalty on the weights (not the bias),
/// fitted by damped Newton iterations.
///
/// Objective: mean log-loss + `regularization / 2 · ‖w‖²`.
pub fn train_logistic(data: &BinaryDataset, cfg: &TrainerConfig) -> Result<Fit> {
    cfg.validate()?;
    data.require_classes(1)?;
    let xs = augmented(data);
    let ys: Vec<f64> = data.labels().iter().map(|l| l.value()).collect();
    let p = data.dim() + 1;
    let n = xs.len() as f64;
    let lambda = cfg.regularization;

    let objective = |w: &[f64]| -> f64 {
        let loss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| softplus(-y * dot_unchecked(w, x)))
            .sum();
        let ridge: f64 = w[..p - 1].iter().map(|v| v * v).sum();
        loss / n + 0.5 * lambda * ridge
    };

    let mut w = vec![0.0; p];
    let mut current = objective(&w);
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        let mut grad = DVector::<f64>::zeros(p);
        let mut hess = DMatrix::<f64>::zeros(p, p);
        for (x, &y) in xs.iter().zip(&ys) {
            let z = dot_unchecked(&w, x);
            let s = sigmoid(-y * z);
            let curvature = s * (1.0 - s);
            for i in 0..p {
                grad[i] -= y * s * x[i] / n;
                for j in 0..=i {
                    hess[(i, j)] += curvature * x[i] * x[j] / n;
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                hess[(j, i)] = hess[(i, j)];
            }
        }
        for i in 0..p - 1 {
            grad[i] += lambda * w[i];
            hess[(i, i)] += lambda;
        }
        if grad.amax() < 1e-10 {
            converged = true;
            break;
        }
        // Separable data drives the curvature to zero; a tiny jitter keeps the
        // Newton system solvable.
        let jitter = 1e-12 * (1.0 + hess.diagonal().amax());
        for i in 0..p {
            hess[(i, i)] += jitter;
        }
        let step = match hess.cholesky() {
            Some(chol) => -chol.solve(&grad),
            None => -grad.clone(),
        };
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = w.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
            let value = objective(&trial);
            if value <= current + 1e-4 * t * slope {
                accepted = Some((trial, value));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, value)) => {
                let improvement = current - value;
                w = trial;
                current = value;
                if improvement <= 1e-15 * (1.0 + current.abs()) {
                    converged = true;
                    break;
                }
            }
            None => {
                // No descent possible at machine precision: stationary point.
                converged = true;
                break;
            }
        }
    }
    let model = model_from_augmented(&w)?;
    Ok(Fit {
        model,
        converged,
        iterations,
        degenerate: false,
    })
}

/// A single sigmoid unit (no hidden layer) trained by stochastic gradient
/// descent on log-loss. The step size is `learning_rate / epoch` and the
/// weights start at zero; `seed` drives only the visiting order.
pub fn train_mlp(data: &BinaryDataset, cfg: &TrainerConfig) -> Result<Fit> {
    cfg.validate()?;
    data.require_classes(1)?;
    let xs = augmented(data);
    let ys: Vec<f64> = data.labels().iter().map(|l| l.value()).collect();
    let p = data.dim() + 1;
    let mut w = vec![0.0; p];
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut rng = resample::rng(cfg.seed);
    let mut converged = false;
    let mut iterations = 0;
    for epoch in 0..cfg.max_iters {
        iterations += 1;
        let eta = cfg.learning_rate / (epoch + 1) as f64;
        order.shuffle(&mut rng);
        let start = w.clone();
        for &i in &order {
            let (x, y) = (&xs[i], ys[i]);
            let s = sigmoid(-y * dot_unchecked(&w, x));
            for j in 0..p {
                let decay = if j + 1 < p {
                    cfg.regularization * w[j]
                } else {
                    0.0
                };
                w[j] -= eta * (decay - y * s * x[j]);
            }
        }
        let moved = w
            .iter()
            .zip(&start)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if moved < 1e-9 {
            converged = true;
            break;
        }
    }
    let model = model_from_augmented(&w)
        .map_err(|e| Error::Training(format!("MLP weights stayed at zero: {e}")))?;
    Ok(Fit {
        model,
        converged,
        iterations,
        degenerate: false,
    })
}

/// Soft-margin linear SVM (hinge loss) solved by dual coordinate descent.
///
/// The bias is learned as the weight of a constant unit feature. Iterations
/// are passes over the data in a seeded random order; the solver stops when
/// the projected-gradient spread drops below 1e-4.
pub fn train_linear_svm(data: &BinaryDataset, cfg: &TrainerConfig) -> Result<Fit> {
    cfg.validate()?;
    data.require_classes(1)?;
    let c = cfg.regularization;
    if c == 0.0 {
        return zero_margin_limit(data);
    }
    let xs = augmented(data);
    let ys: Vec<f64> = data.labels().iter().map(|l| l.value()).collect();
    let p = data.dim() + 1;
    let q_diag: Vec<f64> = xs.iter().map(|x| dot_unchecked(x, x)).collect();
    let mut alpha = vec![0.0; xs.len()];
    let mut w = vec![0.0; p];
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut rng = resample::rng(cfg.seed);
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let (x, y) = (&xs[i], ys[i]);
            let g = y * dot_unchecked(&w, x) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, c);
                let delta = (alpha[i] - old) * y;
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += delta * xj;
                }
            }
        }
        if pg_max - pg_min < 1e-4 {
            converged = true;
            break;
        }
    }
    let weight_norm = w[..p - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
    if weight_norm < 1e-12 {
        return zero_margin_limit(data);
    }
    let model = model_from_augmented(&w)?;
    Ok(Fit {
        model,
        converged,
        iterations,
        degenerate: false,
    })
}

/// As `C → 0` every point violates the margin and the SVM weight vector
/// tends to a positive multiple of `Σ yᵢ xᵢ`. The plane is placed through
/// the data mean and the fit is flagged degenerate.
fn zero_margin_limit(data: &BinaryDataset) -> Result<Fit> {
    let d = data.dim();
    let mut direction = vec![0.0; d];
    for (x, y) in data.iter() {
        for (s, v) in direction.iter_mut().zip(x) {
            *s += y.value() * v;
        }
    }
    let center = mean_of(data.rows().iter().map(Vec::as_slice), d).expect("dataset is non-empty");
    let offset = -dot_unchecked(&direction, &center);
    let model = LinearModel::new(direction, offset)
        .map_err(|_| Error::Degenerate("zero-weight SVM limit has no direction".into()))?;
    Ok(Fit {
        model,
        converged: true,
        iterations: 0,
        degenerate: true,
    })
}
