//! Standardization, PCA, and re-standardization fitted on training rows.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};

use lincomb_core::Error as CoreError;

use crate::error::Result;

/// A fitted `standardize → project → standardize` transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessor {
    /// Input columns kept (non-constant on the training rows).
    kept: Vec<usize>,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// One row per retained component, over the kept columns.
    components: Vec<Vec<f64>>,
    component_mean: Vec<f64>,
    component_scale: Vec<f64>,
    explained: Vec<f64>,
}

fn column_stats(rows: &[Vec<f64>], cols: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; cols];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; cols];
    for r in rows {
        for j in 0..cols {
            var[j] += (r[j] - mean[j]).powi(2);
        }
    }
    let sd = var.into_iter().map(|v| (v / (n - 1.0)).sqrt()).collect();
    (mean, sd)
}

impl Preprocessor {
    /// Fits on `rows`, keeping the fewest leading components whose share of
    /// the total variance reaches `variance`.
    pub fn fit(rows: &[Vec<f64>], variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance <= 1.0) {
            return Err(CoreError::Config(format!(
                "pca variance must lie in (0, 1], got {variance}"
            ))
            .into());
        }
        if rows.len() < 2 {
            return Err(CoreError::Data("preprocessing needs at least 2 rows".into()).into());
        }
        let d = rows[0].len();
        let (mean_all, sd_all) = column_stats(rows, d);
        let kept: Vec<usize> = (0..d).filter(|&j| sd_all[j] > 0.0).collect();
        for j in (0..d).filter(|j| !kept.contains(j)) {
            warn!(
                "attribute {} is constant on the training rows and is dropped",
                j + 1
            );
        }
        if kept.is_empty() {
            return Err(CoreError::Data("every attribute is constant".into()).into());
        }
        let mean: Vec<f64> = kept.iter().map(|&j| mean_all[j]).collect();
        let scale: Vec<f64> = kept.iter().map(|&j| sd_all[j]).collect();
        let k = kept.len();
        let z: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                kept.iter()
                    .enumerate()
                    .map(|(i, &j)| (r[j] - mean[i]) / scale[i])
                    .collect()
            })
            .collect();

        let mut cov = DMatrix::<f64>::zeros(k, k);
        for r in &z {
            for a in 0..k {
                for b in 0..=a {
                    cov[(a, b)] += r[a] * r[b];
                }
            }
        }
        let denom = (rows.len() - 1) as f64;
        for a in 0..k {
            for b in 0..=a {
                let v = cov[(a, b)] / denom;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let total: f64 = values.iter().sum();
        let target = variance * total - 1e-12 * total;
        let mut retained = 0;
        let mut cum = 0.0;
        for v in &values {
            if retained > 0 && cum >= target {
                break;
            }
            cum += v;
            retained += 1;
        }

        let components: Vec<Vec<f64>> = order[..retained]
            .iter()
            .map(|&i| {
                let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
                // Deterministic orientation: the largest-magnitude entry is positive.
                let lead =
                    v.iter().enumerate().fold(
                        0,
                        |best, (j, x)| if x.abs() > v[best].abs() { j } else { best },
                    );
                if v[lead] < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            })
            .collect();
        let scores: Vec<Vec<f64>> = z
            .iter()
            .map(|r| {
                components
                    .iter()
                    .map(|c| c.iter().zip(r).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect();
        let (component_mean, mut component_scale) = column_stats(&scores, retained);
        for s in &mut component_scale {
            if !(*s > 0.0) {
                *s = 1.0;
            }
        }
        Ok(Preprocessor {
            kept,
            mean,
            scale,
            components,
            component_mean,
            component_scale,
            explained: values[..retained].iter().map(|v| v / total).collect(),
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn kept_columns(&self) -> &[usize] {
        &self.kept
    }

    /// Share of the standardized variance carried by each retained component.
    pub fn explained(&self) -> &[f64] {
        &self.explained
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = self
            .kept
            .iter()
            .enumerate()
            .map(|(i, &j)| (row[j] - self.mean[i]) / self.scale[i])
            .collect();
        self.components
            .iter()
            .enumerate()
            .map(|(c, comp)| {
                let s: f64 = comp.iter().zip(&z).map(|(a, b)| a * b).sum();
                (s - self.component_mean[c]) / self.component_scale[c]
            })
            .collect()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}
