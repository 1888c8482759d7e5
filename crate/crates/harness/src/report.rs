//! Rank tables and report files.
//!
//! A run directory holds:
//!
//! - `results.jsonl`: one JSON object per (dataset, learner, combiner, fold)
//!   with the fields of [`RunRecord`].
//! - `timings.csv`: wall time per job (not reproducible, kept apart).
//! - `ranks.csv`: for every learner and combiner, the average rank over
//!   datasets under each criterion.
//! - `summary_<criterion>.csv`: per learner and combiner, the mean fold-averaged
//!   value over datasets, the average rank, the Friedman p-value of the
//!   learner's combiners, and Holm-adjusted pairwise Wilcoxon p-values, with
//!   `*` marking adjusted p < 0.05.
//!
//! Methods are the combiners of one base learner; they are ranked against each
//! other on every dataset. Kappa is ranked highest-first, the losses
//! lowest-first.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use lincomb_core::MetricSet;

use crate::engine::{RunRecord, Timing};
use crate::error::{Error, Result};
use crate::stats::{self, Friedman};

pub const SIGNIFICANCE: f64 = 0.05;

/// Criterion names, losses first.
pub fn criteria() -> &'static [&'static str] {
    &MetricSet::NAMES
}

pub fn higher_is_better(criterion: &str) -> bool {
    criterion == "kappa"
}

pub fn check_criterion(name: &str) -> Result<()> {
    if criteria().contains(&name) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "unknown criterion `{name}`; expected one of {}",
            criteria().join(", ")
        )))
    }
}

/// Comparison of the combiners of one learner under one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub learner: String,
    pub criterion: String,
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    /// `datasets × methods`, each cell averaged over folds.
    pub values: Vec<Vec<f64>>,
    pub avg_ranks: Vec<f64>,
    /// Absent with fewer than two datasets or methods.
    pub friedman: Option<Friedman>,
    /// Holm-adjusted pairwise p-values, `methods × methods`, 1 on the diagonal.
    pub wilcoxon_holm: Vec<Vec<f64>>,
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    out
}

/// Learners in order of first appearance.
pub fn learners(records: &[RunRecord]) -> Vec<String> {
    first_seen(records.iter().map(|r| r.learner.as_str()))
}

/// Builds the rank table of `learner` under `criterion`.
pub fn rank_table(records: &[RunRecord], learner: &str, criterion: &str) -> Result<RankTable> {
    check_criterion(criterion)?;
    let own: Vec<&RunRecord> = records.iter().filter(|r| r.learner == learner).collect();
    if own.is_empty() {
        return Err(Error::Stats(format!("no records for learner {learner}")));
    }
    let methods = first_seen(own.iter().map(|r| r.combiner.as_str()));
    let datasets = first_seen(own.iter().map(|r| r.dataset.as_str()));
    let mut sums: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for r in &own {
        let d = datasets
            .iter()
            .position(|x| *x == r.dataset)
            .expect("collected");
        let m = methods
            .iter()
            .position(|x| *x == r.combiner)
            .expect("collected");
        let v = r.criterion(criterion).expect("criterion checked");
        let e = sums.entry((d, m)).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let mut values = vec![vec![0.0; methods.len()]; datasets.len()];
    for (d, row) in values.iter_mut().enumerate() {
        for (m, cell) in row.iter_mut().enumerate() {
            let (sum, n) = sums.get(&(d, m)).ok_or_else(|| {
                Error::Stats(format!(
                    "no {learner} results for combiner {} on dataset {}",
                    methods[m], datasets[d]
                ))
            })?;
            *cell = sum / *n as f64;
        }
    }
    let hib = higher_is_better(criterion);
    let avg_ranks = stats::average_ranks(&values, hib)?;
    let friedman = if datasets.len() >= 2 && methods.len() >= 2 {
        Some(stats::friedman_test(&values)?)
    } else {
        None
    };

    let k = methods.len();
    let mut pairs = Vec::new();
    let mut raw = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let col = |j: usize| values.iter().map(|row| row[j]).collect::<Vec<_>>();
            raw.push(stats::wilcoxon_signed_rank(&col(a), &col(b))?.p_value);
            pairs.push((a, b));
        }
    }
    let adjusted = stats::holm(&raw);
    let mut wilcoxon_holm = vec![vec![1.0; k]; k];
    for (&(a, b), &p) in pairs.iter().zip(&adjusted) {
        wilcoxon_holm[a][b] = p;
        wilcoxon_holm[b][a] = p;
    }
    Ok(RankTable {
        learner: learner.to_string(),
        criterion: criterion.to_string(),
        methods,
        datasets,
        values,
        avg_ranks,
        friedman,
        wilcoxon_holm,
    })
}

pub fn write_results(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    if records.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "no records".into(),
        });
    }
    Ok(records)
}

pub fn write_timings(timings: &[Timing], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for t in timings {
        w.serialize(t)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn fmt_value(v: f64) -> String {
    format!("{v:.4}")
}

/// Average ranks of every learner's combiners, one row per method and one
/// column per criterion.
pub fn ranks_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["learner".to_string(), "combiner".to_string()];
    header.extend(criteria().iter().map(|c| c.to_string()));
    w.write_record(&header)?;
    for learner in learners(records) {
        let tables: Vec<RankTable> = criteria()
            .iter()
            .map(|c| rank_table(records, &learner, c))
            .collect::<Result<_>>()?;
        for (m, method) in tables[0].methods.iter().enumerate() {
            let mut row = vec![learner.clone(), method.clone()];
            // Every criterion sees the same records, hence the same method order.
            row.extend(tables.iter().map(|t| format!("{:.3}", t.avg_ranks[m])));
            w.write_record(&row)?;
        }
    }
    finish(w)
}

/// Summary of one criterion across all learners.
pub fn summary_csv(records: &[RunRecord], criterion: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let learners = learners(records);
    let tables: Vec<RankTable> = learners
        .iter()
        .map(|l| rank_table(records, l, criterion))
        .collect::<Result<_>>()?;
    let methods = first_seen(
        tables
            .iter()
            .flat_map(|t| t.methods.iter().map(String::as_str)),
    );
    let mut header: Vec<String> = ["learner", "combiner", "mean", "avg_rank", "friedman_p"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(methods.iter().map(|m| format!("holm_p_vs_{m}")));
    w.write_record(&header)?;
    for t in &tables {
        for (i, method) in t.methods.iter().enumerate() {
            let mean = t.values.iter().map(|row| row[i]).sum::<f64>() / t.values.len() as f64;
            let mut row = vec![
                t.learner.clone(),
                method.clone(),
                fmt_value(mean),
                format!("{:.3}", t.avg_ranks[i]),
                t.friedman
                    .map_or_else(|| "NA".to_string(), |f| stats::format_p(f.p_value)),
            ];
            for other in &methods {
                let cell = match t.methods.iter().position(|m| m == other) {
                    Some(j) if j == i => "-".to_string(),
                    Some(j) if t.datasets.len() >= 2 => {
                        let p = t.wilcoxon_holm[i][j];
                        let flag = if p < SIGNIFICANCE { "*" } else { "" };
                        format!("{}{flag}", stats::format_p(p))
                    }
                    _ => "NA".to_string(),
                };
                row.push(cell);
            }
            w.write_record(&row)?;
        }
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Stats(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes `ranks.csv` and one `summary_<criterion>.csv` per criterion.
pub fn emit_summaries(records: &[RunRecord], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(&dir.join("ranks.csv"), &ranks_csv(records)?)?;
    for c in criteria() {
        write_text(
            &dir.join(format!("summary_{c}.csv")),
            &summary_csv(records, c)?,
        )?;
    }
    Ok(())
}

/// Writes the full report of a run into `dir`.
pub fn emit_report(records: &[RunRecord], timings: &[Timing], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_results(records, &dir.join("results.jsonl"))?;
    write_timings(timings, &dir.join("timings.csv"))?;
    emit_summaries(records, dir)
}

/// Plain-text rendering of a rank table for the terminal.
pub fn render_rank_table(t: &RankTable) -> String {
    let mut out = format!("{} / {}\n", t.learner, t.criterion);
    for (m, r) in t.methods.iter().zip(&t.avg_ranks) {
        out.push_str(&format!("  {m:<4} {r:.3}\n"));
    }
    match t.friedman {
        Some(f) => out.push_str(&format!(
            "  Friedman chi2={:.3} p={}\n",
            f.statistic,
            stats::format_p(f.p_value)
        )),
        None => out.push_str("  Friedman p=NA (needs 2 datasets)\n"),
    }
    out
}
