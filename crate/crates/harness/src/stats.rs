//! Average ranks, the Friedman test, the Wilcoxon signed-rank test, and Holm
//! step-down adjustment.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Ranks `1..=k` of `values`, smallest first, ties sharing their mean rank.
pub fn rank_row(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Stats("cannot rank NaN".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    Ok(ranks)
}

/// Per-dataset ranks of a `datasets × methods` table. Rank 1 is the best
/// method: the lowest value, or the highest when `higher_is_better`.
pub fn rank_table(table: &[Vec<f64>], higher_is_better: bool) -> Result<Vec<Vec<f64>>> {
    table
        .iter()
        .map(|row| {
            if higher_is_better {
                rank_row(&row.iter().map(|v| -v).collect::<Vec<_>>())
            } else {
                rank_row(row)
            }
        })
        .collect()
}

fn check_table(table: &[Vec<f64>]) -> Result<usize> {
    let k = table.first().map_or(0, Vec::len);
    if table.is_empty() || k == 0 {
        return Err(Error::Stats("empty table".into()));
    }
    if table.iter().any(|r| r.len() != k) {
        return Err(Error::Stats("rows of unequal length".into()));
    }
    Ok(k)
}

/// Mean rank of every method over the datasets.
pub fn average_ranks(table: &[Vec<f64>], higher_is_better: bool) -> Result<Vec<f64>> {
    let k = check_table(table)?;
    let ranks = rank_table(table, higher_is_better)?;
    let n = ranks.len() as f64;
    Ok((0..k)
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Friedman {
    pub statistic: f64,
    pub p_value: f64,
}

/// Friedman statistic `12n/(k(k+1)) Σ (R̄ⱼ − (k+1)/2)²` over a `datasets ×
/// methods` table, with a chi-square p-value on `k − 1` degrees of freedom.
pub fn friedman_test(table: &[Vec<f64>]) -> Result<Friedman> {
    let k = check_table(table)?;
    if k < 2 || table.len() < 2 {
        return Err(Error::Stats(
            "Friedman test needs at least 2 methods and 2 datasets".into(),
        ));
    }
    let statistic = friedman_statistic(&average_ranks(table, false)?, table.len());
    let chi = ChiSquared::new((k - 1) as f64).map_err(|e| Error::Stats(e.to_string()))?;
    let p_value = if statistic <= 0.0 {
        1.0
    } else {
        chi.sf(statistic)
    };
    Ok(Friedman { statistic, p_value })
}

/// The Friedman statistic from average ranks over `n` datasets.
pub fn friedman_statistic(avg_ranks: &[f64], n: usize) -> f64 {
    let k = avg_ranks.len() as f64;
    let centre = (k + 1.0) / 2.0;
    let ss: f64 = avg_ranks.iter().map(|r| (r - centre).powi(2)).sum();
    (12.0 * n as f64 / (k * (k + 1.0)) * ss).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wilcoxon {
    /// `min(W⁺, W⁻)`.
    pub statistic: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub p_value: f64,
    pub exact: bool,
}

/// Largest number of non-zero differences handled by the exact distribution.
pub const WILCOXON_EXACT_MAX: usize = 20;

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped; tied magnitudes share their mean rank. The null distribution
/// is exact up to [`WILCOXON_EXACT_MAX`] pairs (ties included) and normal
/// with continuity and tie correction above.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<Wilcoxon> {
    if a.len() != b.len() {
        return Err(Error::Stats(format!(
            "paired samples of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| d.is_nan()) {
        return Err(Error::Stats("NaN in paired samples".into()));
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(Wilcoxon {
            statistic: 0.0,
            n,
            p_value: 1.0,
            exact: true,
        });
    }
    let ranks = rank_row(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>())?;
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let statistic = w_plus.min(total - w_plus);

    if n <= WILCOXON_EXACT_MAX {
        // Mean ranks are multiples of 1/2, so doubled ranks are integers.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let s = (2.0 * w_plus).round() as usize;
        let p_value = exact_two_sided(&doubled, s);
        return Ok(Wilcoxon {
            statistic,
            n,
            p_value,
            exact: true,
        });
    }

    let nf = n as f64;
    let mut ties = 0.0;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        (2.0 * normal.sf(z)).min(1.0)
    };
    Ok(Wilcoxon {
        statistic,
        n,
        p_value,
        exact: false,
    })
}

/// `min(1, 2·min(P(S ≤ s), P(S ≥ s)))` where `S` sums a random subset of
/// `weights`, every subset equally likely.
fn exact_two_sided(weights: &[usize], s: usize) -> f64 {
    let max: usize = weights.iter().sum();
    let mut counts = vec![0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &w in weights {
        for t in (0..=reach).rev() {
            if counts[t] > 0.0 {
                counts[t + w] += counts[t];
            }
        }
        reach += w;
    }
    let all = 2f64.powi(weights.len() as i32);
    let lower: f64 = counts[..=s].iter().sum::<f64>() / all;
    let upper: f64 = counts[s..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Holm step-down adjusted p-values, in input order.
pub fn holm(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (step, &i) in order.iter().enumerate() {
        running = running.max(((m - step) as f64 * p_values[i]).min(1.0));
        adjusted[i] = running;
    }
    adjusted
}

/// Three decimals without the leading zero; below `0.001` prints `.000`,
/// and values that round to one print `1.00`.
pub fn format_p(p: f64) -> String {
    let s = format!("{p:.3}");
    if s.starts_with('1') {
        "1.00".to_string()
    } else {
        s.trim_start_matches('0').to_string()
    }
}
