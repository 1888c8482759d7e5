//! Synthetic benchmark sets.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use lincomb_core::resample;
use lincomb_core::LabeledDataset;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Two curved, interleaved 2-D clouds.
    Banana,
    /// Two interleaved 2-D spiral arms.
    Spirals,
    /// Gaussian classes with random centers in `d` dimensions.
    Gaussians,
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "banana" => Ok(Generator::Banana),
            "spirals" => Ok(Generator::Spirals),
            "gauss" | "gaussians" => Ok(Generator::Gaussians),
            _ => Err(Error::Config(format!("unknown generator `{s}`"))),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::Banana => "banana",
            Generator::Spirals => "spirals",
            Generator::Gaussians => "gaussians",
        })
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn two_class_names() -> Vec<String> {
    vec!["1".into(), "2".into()]
}

fn split(n: usize) -> [usize; 2] {
    [n - n / 2, n / 2]
}

/// Banana-shaped two-class set: two interleaved half circles of unit radius,
/// `(cos t, sin t)` and `(1 - cos t, 1/2 - sin t)` for `t` uniform on
/// `[0, pi]`, with isotropic Gaussian noise of scale `noise`. With
/// `noise = 0.3` the bulk of the points lies in `[-1.5, 2.5] x [-1.5, 2]`.
pub fn banana(n: usize, noise: f64, seed: u64) -> Result<LabeledDataset> {
    let mut rng = resample::rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (class, count) in split(n).into_iter().enumerate() {
        for _ in 0..count {
            let t = rng.random::<f64>() * PI;
            let (x, y) = if class == 0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            rows.push(vec![
                x + noise * normal(&mut rng),
                y + noise * normal(&mut rng),
            ]);
            labels.push(class);
        }
    }
    Ok(LabeledDataset::new(rows, labels, two_class_names())?)
}

/// Two spiral arms over 1.5 turns with Gaussian noise of scale `noise`.
pub fn spirals(n: usize, noise: f64, seed: u64) -> Result<LabeledDataset> {
    let mut rng = resample::rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (class, count) in split(n).into_iter().enumerate() {
        for _ in 0..count {
            let t: f64 = rng.random::<f64>().sqrt() * 3.0 * PI;
            let phase = class as f64 * PI;
            rows.push(vec![
                t * (t + phase).cos() + noise * normal(&mut rng),
                t * (t + phase).sin() + noise * normal(&mut rng),
            ]);
            labels.push(class);
        }
    }
    Ok(LabeledDataset::new(rows, labels, two_class_names())?)
}

/// `classes` spherical unit-variance Gaussians in `d` dimensions with centers
/// drawn uniformly from `[-spread, spread]^d`, `n` split evenly.
pub fn gaussians(
    n: usize,
    d: usize,
    classes: usize,
    spread: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if classes < 2 || d == 0 {
        return Err(Error::Config(
            "gaussians need at least 2 classes and 1 dimension".into(),
        ));
    }
    let mut rng = resample::rng(seed);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..d).map(|_| rng.random_range(-spread..=spread)).collect())
        .collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (class, center) in centers.iter().enumerate() {
        let count = n / classes + usize::from(class < n % classes);
        for _ in 0..count {
            rows.push(center.iter().map(|c| c + normal(&mut rng)).collect());
            labels.push(class);
        }
    }
    let names = (1..=classes).map(|c| c.to_string()).collect();
    Ok(LabeledDataset::new(rows, labels, names)?)
}
