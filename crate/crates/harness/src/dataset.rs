//! CSV ingestion and dataset summaries.
//!
//! Files have a header row, numeric feature columns, and the class label in
//! the last column. Class names are ordered numerically when every label
//! parses as a number and lexicographically otherwise, so the class indices
//! do not depend on row order.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use lincomb_core::LabeledDataset;

use crate::error::{Error, Result};

pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, path)
}

/// Parses CSV content; `path` only labels error messages.
pub fn read_csv(reader: impl std::io::Read, path: &Path) -> Result<LabeledDataset> {
    let format = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(format(format!(
            "need at least one feature column and a label column, found {} columns",
            headers.len()
        )));
    }
    let d = headers.len() - 1;
    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(format(format!(
                "line {line}: expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(d);
        for (j, field) in record.iter().take(d).enumerate() {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        column: j + 1,
                        header: headers[j].to_string(),
                        value: field.to_string(),
                    })
                }
            }
        }
        rows.push(row);
        raw_labels.push(record[d].to_string());
    }
    if rows.is_empty() {
        return Err(format("no data rows".into()));
    }
    let class_names = ordered_classes(&raw_labels);
    if class_names.len() < 2 {
        return Err(format(format!(
            "need at least 2 classes, found {}",
            class_names.len()
        )));
    }
    let labels = raw_labels
        .iter()
        .map(|l| {
            class_names
                .iter()
                .position(|c| c == l)
                .expect("label collected above")
        })
        .collect();
    Ok(LabeledDataset::new(rows, labels, class_names)?)
}

fn ordered_classes(labels: &[String]) -> Vec<String> {
    let distinct: BTreeSet<&String> = labels.iter().collect();
    let mut names: Vec<String> = distinct.into_iter().cloned().collect();
    let numeric: Option<Vec<f64>> = names.iter().map(|n| n.parse::<f64>().ok()).collect();
    if let Some(values) = numeric {
        let mut paired: Vec<(f64, String)> = values.into_iter().zip(names).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        names = paired.into_iter().map(|(_, n)| n).collect();
    }
    names
}

/// Writes `data` in the format [`load_csv`] reads. Feature columns are named
/// `x1..xd`, the label column `class`.
pub fn write_csv(data: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = String::new();
    let header: Vec<String> = (1..=data.dim()).map(|j| format!("x{j}")).collect();
    out.push_str(&header.join(","));
    out.push_str(",class\n");
    for (row, &l) in data.rows().iter().zip(data.labels()) {
        for v in row {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&data.class_names()[l]);
        out.push('\n');
    }
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Mean over classes of `largest class size / class size`; 1 for balanced data.
pub fn imbalance_ratio(counts: &[usize]) -> f64 {
    let max = counts.iter().copied().max().unwrap_or(0) as f64;
    let present: Vec<f64> = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64)
        .collect();
    present.iter().map(|c| max / c).sum::<f64>() / present.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub name: String,
    pub instances: usize,
    pub features: usize,
    pub classes: usize,
    pub imbalance_ratio: f64,
}

impl DatasetSummary {
    pub fn of(name: &str, data: &LabeledDataset) -> Self {
        DatasetSummary {
            name: name.to_string(),
            instances: data.len(),
            features: data.dim(),
            classes: data.n_classes(),
            imbalance_ratio: imbalance_ratio(&data.class_counts()),
        }
    }
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: instances={} features={} classes={} IR={:.2}",
            self.name, self.instances, self.features, self.classes, self.imbalance_ratio
        )
    }
}

/// Dataset id used in reports: the file stem.
pub fn dataset_id(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}
